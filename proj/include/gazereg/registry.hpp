#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gazereg/errors.hpp"
#include "gazereg/features.hpp"
#include "gazereg/geometry.hpp"
#include "gazereg/image.hpp"

namespace gazereg::registry {

using geometry::BoundingBox;

/// Surveyed camera location of a reference image, in site coordinates
/// (meters). `label` is free text, typically a grid reference.
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::string label;

    bool operator==(const CameraPose&) const = default;
};

/// One hazard region. `boxes` maps a reference-image id to the region's
/// bounding box in that image, either seeded by hand or propagated.
struct AoiAnnotation {
    std::string aoi_id;
    std::string label;
    std::map<std::string, BoundingBox> boxes;

    bool operator==(const AoiAnnotation&) const = default;
};

/// A featured reference image. `id` is the source filename stem and must be
/// unique within a registry.
struct ReferenceImage {
    std::string id;
    std::string source_path;
    int width = 0;
    int height = 0;
    features::FeatureList features;
    /// 8x8 box downsample of the image, mean-subtracted, row-major. A cheap
    /// appearance fingerprint used to rank candidate pairs before the full
    /// descriptor matching.
    std::array<double, 64> thumbnail_sig{};
    std::optional<CameraPose> pose;

    bool operator==(const ReferenceImage&) const = default;
};

/// The pre-processing model: featured reference images plus AOI annotations.
/// Registries are values; seed_aoi and propagate_aois return new ones and
/// never touch their input. Copies share the image list, since annotation
/// only ever changes the AOI side.
struct Registry {
    std::shared_ptr<const std::vector<ReferenceImage>> images =
        std::make_shared<const std::vector<ReferenceImage>>();
    std::vector<AoiAnnotation> aois;
    features::DetectParams build_params;

    /// Pointer into `images`, or nullptr when no image has that id.
    const ReferenceImage* find(const std::string& id) const;
};

/// Decodes, features, and fingerprints every image, in input order. Ids are
/// the filename stems. `poses_file`, when given, names a CSV
/// `image_id,x_m,y_m,z_m,label` (header row required) attaching a camera
/// pose to each listed image. Featuring fans out across hardware threads;
/// the result does not depend on the schedule.
/// Throws UnreadableImage, DuplicateImageId, PoseForUnknownImage, and Io on
/// an empty input list or an unparseable poses file.
Registry build_registry(const std::vector<std::string>& image_paths,
                        const std::optional<std::string>& poses_file = std::nullopt,
                        const features::DetectParams& feature_params = {});

/// Records a hand-drawn box for (aoi_id, image_id). Seeding an existing AOI
/// updates its label and adds or replaces that image's box.
/// Throws UnknownImage, InvertedBox, BoxOutOfBounds.
Registry seed_aoi(const Registry& reg, const std::string& aoi_id, const std::string& label,
                  const std::string& image_id, const BoundingBox& box);

/// One image annotated by propagation and the anchor it was reached from.
struct PropagationLink {
    std::string image_id;
    std::string anchor_id;
    int inliers = 0;

    bool operator==(const PropagationLink&) const = default;
};

struct PropagationReport {
    std::vector<PropagationLink> propagated; // in annotation order
    std::vector<std::string> uncovered;      // registry order
};

struct PropagateParams {
    /// Smallest RANSAC consensus that counts as a usable link.
    int min_inliers = 15;
    /// Fingerprint candidates tried per image before giving up on it.
    int link_top_k = 10;
    std::uint64_t seed = 0;
};

/// Spreads AOI boxes from seeded images to the rest of the registry.
/// Repeatedly links the unannotated image with the highest match score
/// against its best candidate (top-k by fingerprint distance among already
/// annotated images) and estimates the anchor-to-image homography by RANSAC.
/// Boxes are produced by composing the estimates along the chain back to the
/// anchor's seed image and transforming the hand-drawn seed box once, so
/// transitive coverage never stacks axis-aligned hulls on top of each other.
/// Results are clipped to the image bounds. Images no anchor can reach with
/// min_inliers support are reported uncovered, not guessed. Existing boxes
/// are never overwritten. Deterministic for a fixed registry and params.
/// Throws NoSeeds when no image carries a box.
std::pair<Registry, PropagationReport> propagate_aois(const Registry& reg,
                                                      const PropagateParams& params = {});

/// Writes `manifest.json` and `descriptors.bin` into `dir`, creating it when
/// missing. load_registry of the result reproduces every field bit-exactly.
/// Throws Io.
void save_registry(const Registry& reg, const std::string& dir);

/// Counterpart of save_registry. Throws Io on missing or malformed files,
/// FormatVersionMismatch on an unknown version tag, and ChecksumMismatch
/// when descriptors.bin fails its CRC.
Registry load_registry(const std::string& dir);

/// The 8x8 mean-subtracted intensity signature stored per reference image.
std::array<double, 64> thumbnail_signature(const ImageGray& img);

/// Sum of squared differences between two signatures; lower is more alike.
double signature_ssd(const std::array<double, 64>& a, const std::array<double, 64>& b);

} // namespace gazereg::registry
