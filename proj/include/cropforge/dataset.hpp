#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cropforge/field_model.hpp"
#include "cropforge/render.hpp"

namespace cropforge {

inline constexpr int kManifestSchema = 1;

// One image/mask pair. Paths are relative to the manifest's root directory
// unless they are absolute.
struct ManifestEntry {
    std::string image;
    std::string mask;
    Domain domain = Domain::sim;
    std::optional<Category> category;
    std::string base_id;
    std::optional<int> augmentation_index;

    bool operator==(const ManifestEntry&) const = default;
};

// On disk: <root>/manifest.json next to <root>/images and <root>/masks.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;
    std::optional<std::string> model_id;
    nlohmann::json metadata = nlohmann::json::object();
    // Directory relative entry paths resolve against; not serialised.
    std::filesystem::path root;

    std::filesystem::path resolve(const std::string& relative) const;
    std::size_t count(Domain d) const;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j, std::filesystem::path root = {});

    // Structural equality, ignoring `root`.
    bool same_content(const DatasetManifest& other) const;
};

// `path` may be the manifest file or the dataset directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
// Writes <dir>/manifest.json (atomically, under an exclusive directory lock),
// rewriting entry paths relative to `dir`.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir);

struct ValidationReport {
    std::size_t entry_count = 0;
    std::vector<std::string> missing_files;
    std::vector<std::string> duplicate_ids;
    std::vector<std::string> non_binary_masks;

    bool ok() const { return missing_files.empty() && duplicate_ids.empty() && non_binary_masks.empty(); }
    nlohmann::json to_json() const;
};

// Checks that files exist and (base_id, augmentation_index) is unique.
// With `check_masks`, also loads every mask and checks it is {0, 255}.
ValidationReport validate(const DatasetManifest& manifest, bool check_masks = false);

struct CropOptions {
    int output_size = 512;
    double crop_fraction = 0.75;
};

// Four corner crops (TL, TR, BL, BR = augmentation_index 0..3) rescaled to
// output_size; bilinear for photos, nearest for masks.
std::array<SamplePair, 4> augment_crops(const SamplePair& pair, const CropOptions& options = {});

// One training-set composition: how many simulated and real samples.
struct MixSpec {
    std::string model_id;
    std::size_t sim_count = 0;
    std::size_t real_count = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// The thirteen compositions A1..A6, B1..B6 and R.
const std::vector<MixSpec>& mix_presets();
std::optional<MixSpec> find_preset(std::string_view model_id);

// Uniform selection without replacement per domain.
DatasetManifest mix(const DatasetManifest& sim, const DatasetManifest& real, const MixSpec& spec);

// 100 * real / sim. Throws when sim_count is zero.
double relative_percentage(const MixSpec& spec);
double relative_percentage(const DatasetManifest& manifest);

// Deterministic train/test split. Augmentations of one base image stay
// together; strata are categories. `train_fraction` of each stratum's base
// images (rounded) goes to train.
std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest, double train_fraction,
                                                  std::uint64_t seed);

}  // namespace cropforge
