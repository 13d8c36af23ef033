#include "gazereg/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace gazereg::image_io {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw UnreadableImage(path, "cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::uint8_t* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Io("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out)
        throw Io("short write: " + path);
}

std::uint8_t luminance(int r, int g, int b) {
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::lround(y));
}

// ---------------------------------------------------------------------------
// PGM (P5)
// ---------------------------------------------------------------------------

// Reads the next whitespace-delimited token, skipping '#' comments.
std::string next_pgm_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        token.push_back(static_cast<char>(bytes[pos]));
        ++pos;
    }
    return token;
}

ImageGray load_pgm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 2; // past "P5"
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_pgm_token(bytes, pos));
        h = std::stoi(next_pgm_token(bytes, pos));
        maxval = std::stoi(next_pgm_token(bytes, pos));
    } catch (const std::exception&) {
        throw UnreadableImage(path, "bad PGM header");
    }
    if (w <= 0 || h <= 0)
        throw UnreadableImage(path, "bad PGM dimensions");
    if (maxval <= 0 || maxval > 255)
        throw UnreadableImage(path, "unsupported PGM maxval " + std::to_string(maxval));
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (bytes.size() < pos + need)
        throw UnreadableImage(path, "truncated PGM payload");

    ImageGray img(w, h);
    std::memcpy(img.pixels.data(), bytes.data() + pos, need);
    return img;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

ImageGray load_png(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 + 25 || std::memcmp(bytes.data(), kPngMagic, 8) != 0)
        throw UnreadableImage(path, "bad PNG signature");

    std::size_t pos = 8;
    int w = 0, h = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;

    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = read_u32_be(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw UnreadableImage(path, "truncated PNG chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13)
                throw UnreadableImage(path, "bad IHDR");
            w = static_cast<int>(read_u32_be(data));
            h = static_cast<int>(read_u32_be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }

    if (!saw_ihdr || idat.empty())
        throw UnreadableImage(path, "missing PNG chunks");
    if (w <= 0 || h <= 0)
        throw UnreadableImage(path, "bad PNG dimensions");
    if (bit_depth != 8)
        throw UnreadableImage(path, "unsupported PNG bit depth " + std::to_string(bit_depth));
    if (interlace != 0)
        throw UnreadableImage(path, "interlaced PNG not supported");

    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default:
            throw UnreadableImage(path, "unsupported PNG color type " + std::to_string(color_type));
    }

    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    const std::size_t raw_size = (stride + 1) * h;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf out_len = raw_size;
    if (uncompress(raw.data(), &out_len, idat.data(), idat.size()) != Z_OK || out_len != raw_size)
        throw UnreadableImage(path, "PNG inflate failed");

    // Undo per-scanline filtering in place.
    std::vector<std::uint8_t> scanlines(stride * h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t filter = raw[(stride + 1) * y];
        const std::uint8_t* src = &raw[(stride + 1) * y + 1];
        std::uint8_t* cur = &scanlines[stride * y];
        const std::uint8_t* prev = y > 0 ? &scanlines[stride * (y - 1)] : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? cur[i - channels] : 0;
            const int b = prev ? prev[i] : 0;
            const int c = (prev && i >= static_cast<std::size_t>(channels)) ? prev[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw UnreadableImage(path, "bad PNG filter type");
            }
            cur[i] = static_cast<std::uint8_t>(v & 0xff);
        }
    }

    ImageGray img(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = &scanlines[stride * y];
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = row + static_cast<std::size_t>(x) * channels;
            std::uint8_t g;
            switch (channels) {
                case 1: g = px[0]; break;
                case 2: g = px[0]; break; // gray + alpha
                default: g = luminance(px[0], px[1], px[2]); break;
            }
            img.at(x, y) = g;
        }
    }
    return img;
}

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t len) {
    append_u32_be(out, static_cast<std::uint32_t>(len));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    if (len) out.insert(out.end(), data, data + len);
    const uLong crc = crc32(0, out.data() + start, static_cast<uInt>(4 + len));
    append_u32_be(out, static_cast<std::uint32_t>(crc));
}

} // namespace

ImageGray load_image(const std::string& path) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
        return load_pgm(path, bytes);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0)
        return load_png(path, bytes);
    throw UnreadableImage(path, "unknown format");
}

void save_png(const ImageGray& img, const std::string& path) {
    const std::size_t stride = static_cast<std::size_t>(img.width);
    std::vector<std::uint8_t> raw((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw[(stride + 1) * y] = 0; // filter: none
        std::memcpy(&raw[(stride + 1) * y + 1], &img.pixels[stride * y], stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw Io("PNG deflate failed: " + path);
    compressed.resize(bound);

    std::vector<std::uint8_t> out(kPngMagic, kPngMagic + 8);
    std::uint8_t ihdr[13];
    ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
    ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
    ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
    ihdr[3] = static_cast<std::uint8_t>(img.width);
    ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
    ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
    ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
    ihdr[7] = static_cast<std::uint8_t>(img.height);
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 0;  // grayscale
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    append_chunk(out, "IHDR", ihdr, 13);
    append_chunk(out, "IDAT", compressed.data(), compressed.size());
    append_chunk(out, "IEND", nullptr, 0);
    write_file(path, out.data(), out.size());
}

void save_pgm(const ImageGray& img, const std::string& path) {
    std::string header = "P5\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    write_file(path, out.data(), out.size());
}

} // namespace gazereg::image_io
