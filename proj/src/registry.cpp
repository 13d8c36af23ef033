#include "gazereg/registry.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace gazereg::registry {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kDescriptorMagic[4] = {'G', 'Z', 'R', 'G'};
// bytes per stored keypoint: x, y, scale, orientation, response + descriptor
constexpr std::size_t kFeatureRecordBytes = 5 * 4 + 32;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Decorrelates the per-link RANSAC seed from the user seed and the two
/// image indices, so reordering unrelated links never perturbs a fit.
std::uint64_t link_seed(std::uint64_t seed, std::size_t image, std::size_t anchor) {
    return splitmix64(splitmix64(seed + 0x632be59bd9b4e019ULL * (image + 1)) +
                      0xd1342543de82ef95ULL * (anchor + 1));
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Keypoint fields travel as f32 on disk. Quantizing at build time keeps a
/// fresh registry and its reloaded copy equal bit for bit.
void quantize_for_storage(features::FeatureList& feats) {
    for (auto& f : feats) {
        auto& kp = f.keypoint;
        kp.position = Point2(f32(kp.position.x()), f32(kp.position.y()));
        kp.scale = f32(kp.scale);
        kp.orientation = f32(kp.orientation);
        kp.response = f32(kp.response);
    }
}

double parse_double_field(std::string_view field, const std::string& path, int line) {
    double value = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw Io(path + " line " + std::to_string(line) + ": bad number '" + std::string(field) +
                 "'");
    return value;
}

void attach_poses(std::vector<ReferenceImage>& images, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Io("cannot open poses file: " + path);

    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < images.size(); ++i) index.emplace(images[i].id, i);

    std::string row;
    if (!std::getline(in, row)) throw Io(path + ": empty poses file");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != "image_id,x_m,y_m,z_m,label")
        throw Io(path + ": expected header image_id,x_m,y_m,z_m,label");

    for (int line = 2; std::getline(in, row); ++line) {
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;

        // id, x, y, z, then the label, which keeps any further commas
        std::array<std::string_view, 4> fields;
        std::string_view rest = row;
        for (auto& field : fields) {
            const auto comma = rest.find(',');
            if (comma == std::string_view::npos)
                throw Io(path + " line " + std::to_string(line) + ": expected 5 fields");
            field = rest.substr(0, comma);
            rest.remove_prefix(comma + 1);
        }

        CameraPose pose;
        pose.position.x() = parse_double_field(fields[1], path, line);
        pose.position.y() = parse_double_field(fields[2], path, line);
        pose.position.z() = parse_double_field(fields[3], path, line);
        pose.label = std::string(rest);
        if (!pose.position.allFinite())
            throw Io(path + " line " + std::to_string(line) + ": non-finite coordinate");

        const auto it = index.find(fields[0]);
        if (it == index.end())
            throw PoseForUnknownImage("poses file names unknown image '" + std::string(fields[0]) +
                                      "'");
        images[it->second].pose = std::move(pose);
    }
}

// ---- little-endian byte plumbing for descriptors.bin ----

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::string_view buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off])) |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 3])) << 24;
}

struct BinReader {
    std::string_view buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw Io("descriptors.bin: truncated");
    }
    std::uint32_t u32() {
        need(4);
        const std::uint32_t v = get_u32(buf, pos);
        pos += 4;
        return v;
    }
    double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
    void bytes(std::uint8_t* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, buf.data() + pos, n);
        pos += n;
    }
};

std::uint32_t crc32_of(std::string_view data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    while (!data.empty()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size(), 1u << 30));
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), chunk);
        data.remove_prefix(chunk);
    }
    return static_cast<std::uint32_t>(crc);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Io("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file(const fs::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Io("cannot open " + path.string() + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Io("write failed: " + path.string());
}

} // namespace

const ReferenceImage* Registry::find(const std::string& id) const {
    for (const auto& img : *images)
        if (img.id == id) return &img;
    return nullptr;
}

std::array<double, 64> thumbnail_signature(const ImageGray& img) {
    if (img.width < 8 || img.height < 8)
        throw ImageTooSmall("thumbnail signature needs at least 8x8 pixels");

    std::array<double, 64> sig{};
    double total = 0.0;
    for (int cy = 0; cy < 8; ++cy) {
        const int y0 = cy * img.height / 8;
        const int y1 = (cy + 1) * img.height / 8;
        for (int cx = 0; cx < 8; ++cx) {
            const int x0 = cx * img.width / 8;
            const int x1 = (cx + 1) * img.width / 8;
            double sum = 0.0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) sum += img.at(x, y);
            sig[cy * 8 + cx] = sum / ((y1 - y0) * (x1 - x0));
            total += sig[cy * 8 + cx];
        }
    }
    const double mean = total / 64.0;
    for (double& v : sig) v -= mean;
    return sig;
}

double signature_ssd(const std::array<double, 64>& a, const std::array<double, 64>& b) {
    double ssd = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double d = a[i] - b[i];
        ssd += d * d;
    }
    return ssd;
}

Registry build_registry(const std::vector<std::string>& image_paths,
                        const std::optional<std::string>& poses_file,
                        const features::DetectParams& feature_params) {
    if (image_paths.empty()) throw Io("build_registry: no input images");

    std::vector<ReferenceImage> images(image_paths.size());
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < image_paths.size(); ++i) {
            images[i].id = fs::path(image_paths[i]).stem().string();
            images[i].source_path = image_paths[i];
            if (!seen.insert(images[i].id).second)
                throw DuplicateImageId("duplicate image id '" + images[i].id + "'");
        }
    }

    // Featuring dominates build time and every image is independent, so fan
    // out across hardware threads. Each result lands in its input slot, which
    // keeps the registry in input order regardless of the schedule.
    std::vector<std::exception_ptr> failures(image_paths.size());
    std::atomic<std::size_t> cursor{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= image_paths.size()) return;
            try {
                const ImageGray img = image_io::load_image(image_paths[i]);
                images[i].width = img.width;
                images[i].height = img.height;
                images[i].features = features::detect_and_describe(img, feature_params);
                quantize_for_storage(images[i].features);
                images[i].thumbnail_sig = thumbnail_signature(img);
            } catch (const ImageTooSmall&) {
                failures[i] = std::make_exception_ptr(
                    UnreadableImage(image_paths[i], "below the 32 px featuring minimum"));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < std::min(hw, image_paths.size()); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    // report the earliest failure by input position, for a stable message
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);

    if (poses_file) attach_poses(images, *poses_file);

    Registry reg;
    reg.images = std::make_shared<const std::vector<ReferenceImage>>(std::move(images));
    reg.build_params = feature_params;
    return reg;
}

Registry seed_aoi(const Registry& reg, const std::string& aoi_id, const std::string& label,
                  const std::string& image_id, const BoundingBox& box) {
    const ReferenceImage* img = reg.find(image_id);
    if (!img) throw UnknownImage("cannot seed AOI on unknown image '" + image_id + "'");
    if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max))
        throw InvertedBox("seed box for '" + aoi_id + "' has non-positive extent");
    if (box.x_min < 0 || box.y_min < 0 || box.x_max > img->width || box.y_max > img->height)
        throw BoxOutOfBounds("seed box for '" + aoi_id + "' exceeds the bounds of " + image_id);

    Registry out = reg;
    auto it = std::find_if(out.aois.begin(), out.aois.end(),
                           [&](const AoiAnnotation& a) { return a.aoi_id == aoi_id; });
    if (it == out.aois.end()) {
        out.aois.push_back(AoiAnnotation{aoi_id, label, {}});
        it = std::prev(out.aois.end());
    } else {
        it->label = label;
    }
    it->boxes[image_id] = box;
    return out;
}

std::pair<Registry, PropagationReport> propagate_aois(const Registry& reg,
                                                      const PropagateParams& params) {
    const auto& imgs = *reg.images;
    const std::size_t n = imgs.size();

    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(imgs[i].id, i);

    Registry out = reg;
    PropagationReport report;

    // Every annotated image carries a chain: the seed image its boxes trace
    // back to and the composed homography estimate from there. Propagated
    // boxes are always one transform_box of a hand-drawn seed through that
    // chain; transforming an already-propagated box instead would stack
    // axis-aligned hulls and bloat under rotation.
    struct Chain {
        std::size_t root;
        geometry::Homography33 from_root;
    };
    std::vector<std::optional<Chain>> chains(n);
    for (const auto& aoi : out.aois)
        for (const auto& [id, box] : aoi.boxes) {
            const auto it = index.find(id);
            if (it == index.end())
                throw UnknownImage("AOI '" + aoi.aoi_id + "' references unknown image '" + id +
                                   "'");
            chains[it->second] = Chain{it->second, geometry::Homography33::identity()};
        }
    if (std::none_of(chains.begin(), chains.end(), [](const auto& c) { return c.has_value(); }))
        throw NoSeeds("propagate_aois requires at least one seeded box");

    const int required = std::max(4, params.min_inliers);
    const auto pair_key = [n](std::size_t u, std::size_t a) {
        return static_cast<std::uint64_t>(u) * n + a;
    };
    // match scores are deterministic, so cache them across rounds
    std::unordered_map<std::uint64_t, int> score_cache;
    std::unordered_set<std::uint64_t> failed_links;

    geometry::RansacParams ransac;
    ransac.min_inliers = params.min_inliers;

    for (;;) {
        // Every unsettled image nominates its best-matching anchor among the
        // top-k closest fingerprints; the strongest nomination wins the
        // round. Ties resolve toward the lower image index.
        std::size_t best_u = n;
        std::size_t best_a = n;
        int best_score = required - 1;
        for (std::size_t u = 0; u < n; ++u) {
            if (chains[u]) continue;
            std::vector<std::pair<double, std::size_t>> candidates;
            for (std::size_t a = 0; a < n; ++a) {
                if (!chains[a] || failed_links.contains(pair_key(u, a))) continue;
                candidates.emplace_back(signature_ssd(imgs[u].thumbnail_sig, imgs[a].thumbnail_sig),
                                        a);
            }
            std::sort(candidates.begin(), candidates.end());
            if (candidates.size() > static_cast<std::size_t>(params.link_top_k))
                candidates.resize(static_cast<std::size_t>(params.link_top_k));
            for (const auto& [ssd, a] : candidates) {
                auto [it, fresh] = score_cache.try_emplace(pair_key(u, a), 0);
                if (fresh) it->second = features::match_score(imgs[a].features, imgs[u].features);
                if (it->second > best_score) {
                    best_score = it->second;
                    best_u = u;
                    best_a = a;
                }
            }
        }
        if (best_u == n) break;

        const ReferenceImage& anchor = imgs[best_a];
        const ReferenceImage& target = imgs[best_u];
        const auto matches = features::match_descriptors(anchor.features, target.features);
        ransac.seed = link_seed(params.seed, best_u, best_a);
        geometry::RansacResult fit;
        try {
            fit = geometry::estimate_homography_ransac(matches, ransac);
        } catch (const NoConsensus&) {
            // not a usable link after all; the image may still reach another
            // anchor in a later round
            failed_links.insert(pair_key(best_u, best_a));
            continue;
        }

        const Chain& upstream = *chains[best_a];
        const geometry::Homography33 from_root(fit.h.matrix() * upstream.from_root.matrix());
        const std::string& root_id = imgs[upstream.root].id;
        for (auto& aoi : out.aois) {
            const auto src = aoi.boxes.find(root_id);
            if (src == aoi.boxes.end()) continue;
            BoundingBox mapped;
            try {
                mapped = geometry::transform_box(from_root, src->second);
            } catch (const PointAtInfinity&) {
                continue; // a corner leaves the finite plane; treat as out of view
            }
            mapped.x_min = std::clamp(mapped.x_min, 0.0, static_cast<double>(target.width));
            mapped.x_max = std::clamp(mapped.x_max, 0.0, static_cast<double>(target.width));
            mapped.y_min = std::clamp(mapped.y_min, 0.0, static_cast<double>(target.height));
            mapped.y_max = std::clamp(mapped.y_max, 0.0, static_cast<double>(target.height));
            if (!mapped.valid()) continue; // clipped away entirely
            aoi.boxes[target.id] = mapped;
        }
        report.propagated.push_back(PropagationLink{target.id, anchor.id, fit.inlier_count});
        chains[best_u] = Chain{upstream.root, from_root};
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!chains[i]) report.uncovered.push_back(imgs[i].id);

    return {std::move(out), std::move(report)};
}

void save_registry(const Registry& reg, const std::string& dir) {
    const fs::path base(dir);
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) throw Io("cannot create " + base.string() + ": " + ec.message());

    json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["detect_params"] = {
        {"max_keypoints", reg.build_params.max_keypoints},
        {"threshold", reg.build_params.threshold},
        {"pyramid_levels", reg.build_params.pyramid_levels},
        {"scale_factor", reg.build_params.scale_factor},
    };

    json images = json::array();
    for (const auto& img : *reg.images) {
        json rec;
        rec["id"] = img.id;
        rec["source_path"] = img.source_path;
        rec["width"] = img.width;
        rec["height"] = img.height;
        rec["thumbnail_sig"] = img.thumbnail_sig;
        if (img.pose) {
            rec["pose"] = {
                {"position",
                 {img.pose->position.x(), img.pose->position.y(), img.pose->position.z()}},
                {"label", img.pose->label},
            };
        }
        images.push_back(std::move(rec));
    }
    manifest["images"] = std::move(images);

    json aois = json::array();
    for (const auto& aoi : reg.aois) {
        json boxes = json::object();
        for (const auto& [id, b] : aoi.boxes) boxes[id] = {b.x_min, b.y_min, b.x_max, b.y_max};
        aois.push_back({{"aoi_id", aoi.aoi_id}, {"label", aoi.label}, {"boxes", std::move(boxes)}});
    }
    manifest["aois"] = std::move(aois);

    write_file(base / "manifest.json", manifest.dump(2) + "\n");

    std::string payload;
    payload.append(kDescriptorMagic, 4);
    put_u32(payload, kFormatVersion);
    for (const auto& img : *reg.images) {
        put_u32(payload, static_cast<std::uint32_t>(img.features.size()));
        for (const auto& f : img.features) {
            put_f32(payload, static_cast<float>(f.keypoint.position.x()));
            put_f32(payload, static_cast<float>(f.keypoint.position.y()));
            put_f32(payload, static_cast<float>(f.keypoint.scale));
            put_f32(payload, static_cast<float>(f.keypoint.orientation));
            put_f32(payload, static_cast<float>(f.keypoint.response));
            payload.append(reinterpret_cast<const char*>(f.descriptor.bytes.data()), 32);
        }
    }
    const std::uint32_t crc = crc32_of(payload);
    put_u32(payload, crc);
    write_file(base / "descriptors.bin", payload);
}

Registry load_registry(const std::string& dir) {
    const fs::path base(dir);

    json manifest;
    try {
        manifest = json::parse(read_file(base / "manifest.json"));
    } catch (const json::exception& e) {
        throw Io("manifest.json: " + std::string(e.what()));
    }

    std::int64_t version = -1;
    if (manifest.contains("format_version") && manifest["format_version"].is_number_integer())
        version = manifest["format_version"].get<std::int64_t>();
    if (version != kFormatVersion)
        throw FormatVersionMismatch("manifest.json carries format_version " +
                                    std::to_string(version) + ", expected " +
                                    std::to_string(kFormatVersion));

    Registry reg;
    std::vector<ReferenceImage> images;
    try {
        const json& jdp = manifest.at("detect_params");
        reg.build_params.max_keypoints = jdp.at("max_keypoints").get<int>();
        reg.build_params.threshold = jdp.at("threshold").get<double>();
        reg.build_params.pyramid_levels = jdp.at("pyramid_levels").get<int>();
        reg.build_params.scale_factor = jdp.at("scale_factor").get<double>();

        for (const json& rec : manifest.at("images")) {
            ReferenceImage img;
            img.id = rec.at("id").get<std::string>();
            img.source_path = rec.at("source_path").get<std::string>();
            img.width = rec.at("width").get<int>();
            img.height = rec.at("height").get<int>();
            const json& sig = rec.at("thumbnail_sig");
            if (sig.size() != img.thumbnail_sig.size())
                throw Io("manifest.json: thumbnail_sig of '" + img.id + "' is not 64 values");
            for (std::size_t i = 0; i < img.thumbnail_sig.size(); ++i)
                img.thumbnail_sig[i] = sig.at(i).get<double>();
            if (rec.contains("pose")) {
                const json& jp = rec.at("pose");
                CameraPose pose;
                pose.position = Eigen::Vector3d(jp.at("position").at(0).get<double>(),
                                                jp.at("position").at(1).get<double>(),
                                                jp.at("position").at(2).get<double>());
                pose.label = jp.at("label").get<std::string>();
                img.pose = std::move(pose);
            }
            images.push_back(std::move(img));
        }

        for (const json& ja : manifest.at("aois")) {
            AoiAnnotation aoi;
            aoi.aoi_id = ja.at("aoi_id").get<std::string>();
            aoi.label = ja.at("label").get<std::string>();
            for (const auto& [id, jb] : ja.at("boxes").items())
                aoi.boxes.emplace(id, BoundingBox{jb.at(0).get<double>(), jb.at(1).get<double>(),
                                                  jb.at(2).get<double>(), jb.at(3).get<double>()});
            reg.aois.push_back(std::move(aoi));
        }
    } catch (const json::exception& e) {
        throw Io("manifest.json: " + std::string(e.what()));
    }

    const std::string blob = read_file(base / "descriptors.bin");
    if (blob.size() < 12) throw Io("descriptors.bin: truncated");
    if (std::memcmp(blob.data(), kDescriptorMagic, sizeof(kDescriptorMagic)) != 0)
        throw Io("descriptors.bin: bad magic");
    const std::uint32_t bin_version = get_u32(blob, 4);
    if (bin_version != kFormatVersion)
        throw FormatVersionMismatch("descriptors.bin carries version " +
                                    std::to_string(bin_version) + ", expected " +
                                    std::to_string(kFormatVersion));
    const std::string_view payload(blob.data(), blob.size() - 4);
    if (crc32_of(payload) != get_u32(blob, blob.size() - 4))
        throw ChecksumMismatch("descriptors.bin failed its CRC check");

    BinReader reader{payload, sizeof(kDescriptorMagic) + 4};
    for (auto& img : images) {
        const std::uint32_t count = reader.u32();
        if (static_cast<std::size_t>(count) * kFeatureRecordBytes > payload.size() - reader.pos)
            throw Io("descriptors.bin: truncated");
        img.features.resize(count);
        for (auto& f : img.features) {
            const double x = reader.f32();
            const double y = reader.f32();
            f.keypoint.position = Point2(x, y);
            f.keypoint.scale = reader.f32();
            f.keypoint.orientation = reader.f32();
            f.keypoint.response = reader.f32();
            reader.bytes(f.descriptor.bytes.data(), f.descriptor.bytes.size());
        }
    }
    if (reader.pos != payload.size()) throw Io("descriptors.bin: trailing bytes");

    reg.images = std::make_shared<const std::vector<ReferenceImage>>(std::move(images));
    return reg;
}

} // namespace gazereg::registry
