#include "cropforge/dataset.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <opencv2/imgproc.hpp>

#include "cropforge/error.hpp"
#include "cropforge/image_io.hpp"
#include "cropforge/rng.hpp"

namespace cropforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Holds flock(LOCK_EX) on a directory for the lifetime of the object.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) : fd_(::open(dir.c_str(), O_RDONLY | O_DIRECTORY)) {
        if (fd_ < 0) throw Error("cannot open directory " + dir.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw Error("cannot lock " + dir.string());
        }
    }
    ~DirectoryLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    int fd_;
};

std::string entry_key(const ManifestEntry& e) {
    return e.base_id + "#" + (e.augmentation_index ? std::to_string(*e.augmentation_index) : "none");
}

}  // namespace

fs::path DatasetManifest::resolve(const std::string& relative) const {
    const fs::path p(relative);
    return p.is_absolute() ? p : root / p;
}

std::size_t DatasetManifest::count(Domain d) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [d](const ManifestEntry& e) { return e.domain == d; }));
}

json DatasetManifest::to_json() const {
    json j;
    j["schema"] = kManifestSchema;
    j["seed"] = seed;
    j["model_id"] = model_id ? json(*model_id) : json(nullptr);
    j["metadata"] = metadata;
    json list = json::array();
    for (const ManifestEntry& e : entries) {
        json item;
        item["image"] = e.image;
        item["mask"] = e.mask;
        item["domain"] = std::string(domain_name(e.domain));
        item["category"] = e.category ? json(std::string(1, to_char(*e.category))) : json("none");
        item["base_id"] = e.base_id;
        item["augmentation_index"] = e.augmentation_index ? json(*e.augmentation_index) : json(nullptr);
        list.push_back(std::move(item));
    }
    j["entries"] = std::move(list);
    return j;
}

DatasetManifest DatasetManifest::from_json(const json& j, fs::path root) {
    if (!j.is_object()) throw ValidationError("manifest", "expected a JSON object");
    if (j.value("schema", 0) != kManifestSchema)
        throw ValidationError("manifest.schema", "unsupported schema (expected " + std::to_string(kManifestSchema) + ")");
    DatasetManifest m;
    m.root = std::move(root);
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("model_id") && j["model_id"].is_string()) m.model_id = j["model_id"].get<std::string>();
    if (j.contains("metadata")) m.metadata = j["metadata"];
    for (const json& item : j.at("entries")) {
        ManifestEntry e;
        e.image = item.at("image").get<std::string>();
        e.mask = item.at("mask").get<std::string>();
        e.domain = domain_from_name(item.at("domain").get<std::string>());
        const std::string cat = item.value("category", std::string("none"));
        if (cat != "none") e.category = category_from_id(cat);
        e.base_id = item.at("base_id").get<std::string>();
        if (item.contains("augmentation_index") && !item["augmentation_index"].is_null()) {
            const int a = item["augmentation_index"].get<int>();
            if (a < 0 || a > 3) throw ValidationError("augmentation_index", "must lie in 0..3");
            e.augmentation_index = a;
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

bool DatasetManifest::same_content(const DatasetManifest& other) const {
    return entries == other.entries && seed == other.seed && model_id == other.model_id &&
           metadata == other.metadata;
}

DatasetManifest read_manifest(const fs::path& path) {
    const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
    std::ifstream in(file);
    if (!in) throw Error("cannot open manifest " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("malformed manifest " + file.string() + ": " + e.what());
    }
    return DatasetManifest::from_json(j, file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

void write_manifest(const DatasetManifest& manifest, const fs::path& dir) {
    fs::create_directories(dir);
    DatasetManifest out = manifest;
    const fs::path abs_dir = fs::absolute(dir).lexically_normal();
    auto relativise = [&](std::string& p) {
        const fs::path resolved = fs::absolute(manifest.resolve(p)).lexically_normal();
        p = resolved.lexically_relative(abs_dir).generic_string();
    };
    if (!manifest.root.empty() || std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                              [](const ManifestEntry& e) { return fs::path(e.image).is_absolute(); })) {
        for (ManifestEntry& e : out.entries) {
            relativise(e.image);
            relativise(e.mask);
        }
    }
    const fs::path target = dir / "manifest.json";
    const fs::path temp = dir / ".manifest.json.tmp";
    DirectoryLock lock(dir);
    {
        std::ofstream os(temp, std::ios::trunc);
        if (!os) throw Error("cannot write " + temp.string());
        os << out.to_json().dump(2) << '\n';
        if (!os) throw Error("cannot write " + temp.string());
    }
    fs::rename(temp, target);
}

json ValidationReport::to_json() const {
    return {{"ok", ok()},
            {"entries", entry_count},
            {"missing_files", missing_files},
            {"duplicate_ids", duplicate_ids},
            {"non_binary_masks", non_binary_masks}};
}

ValidationReport validate(const DatasetManifest& manifest, bool check_masks) {
    ValidationReport report;
    report.entry_count = manifest.entries.size();
    std::set<std::string> seen;
    for (const ManifestEntry& e : manifest.entries) {
        for (const std::string* p : {&e.image, &e.mask})
            if (!fs::is_regular_file(manifest.resolve(*p))) report.missing_files.push_back(*p);
        const std::string key = entry_key(e);
        if (!seen.insert(key).second) report.duplicate_ids.push_back(key);
        if (check_masks && fs::is_regular_file(manifest.resolve(e.mask))) {
            if (!is_binary_mask(read_gray_png(manifest.resolve(e.mask)))) report.non_binary_masks.push_back(e.mask);
        }
    }
    return report;
}

std::array<SamplePair, 4> augment_crops(const SamplePair& pair, const CropOptions& options) {
    if (pair.rgb.size() != pair.mask.size()) throw ValidationError("pair", "photo and mask sizes differ");
    if (!(options.crop_fraction > 0.0 && options.crop_fraction <= 1.0))
        throw ValidationError("crop_fraction", "must lie in (0, 1]");
    if (options.output_size <= 0) throw ValidationError("output_size", "must be > 0");
    const int cw = static_cast<int>(std::lround(options.crop_fraction * pair.rgb.cols));
    const int ch = static_cast<int>(std::lround(options.crop_fraction * pair.rgb.rows));
    const int min_crop = static_cast<int>(std::lround(options.crop_fraction * options.output_size));
    if (cw < min_crop || ch < min_crop)
        throw ValidationError("pair", "input " + std::to_string(pair.rgb.cols) + "x" + std::to_string(pair.rgb.rows) +
                                          " is smaller than the " + std::to_string(options.output_size) +
                                          " px target");
    const std::array<cv::Point, 4> corners = {cv::Point(0, 0), cv::Point(pair.rgb.cols - cw, 0),
                                              cv::Point(0, pair.rgb.rows - ch),
                                              cv::Point(pair.rgb.cols - cw, pair.rgb.rows - ch)};
    const cv::Size out(options.output_size, options.output_size);
    std::array<SamplePair, 4> result;
    for (int i = 0; i < 4; ++i) {
        const cv::Rect roi(corners[i], cv::Size(cw, ch));
        SamplePair& r = result[i];
        r = pair;
        // fresh buffers: Mat assignment shares pixels with the input
        r.rgb = cv::Mat();
        r.mask = cv::Mat();
        cv::resize(pair.rgb(roi), r.rgb, out, 0.0, 0.0, cv::INTER_LINEAR);
        cv::resize(pair.mask(roi), r.mask, out, 0.0, 0.0, cv::INTER_NEAREST);
    }
    return result;
}

void MixSpec::validate() const {
    if (sim_count + real_count == 0) throw ValidationError("mix", "sim_count + real_count must be > 0");
}

const std::vector<MixSpec>& mix_presets() {
    static const std::vector<MixSpec> presets = {
        {"A1", 500, 0},    {"A2", 500, 50},    {"A3", 500, 100},   {"A4", 500, 150},   {"A5", 500, 200},
        {"A6", 500, 250},  {"B1", 1000, 0},    {"B2", 1000, 100},  {"B3", 1000, 200},  {"B4", 1000, 300},
        {"B5", 1000, 400}, {"B6", 1000, 500},  {"R", 0, 750},
    };
    return presets;
}

std::optional<MixSpec> find_preset(std::string_view model_id) {
    for (const MixSpec& m : mix_presets())
        if (m.model_id == model_id) return m;
    return std::nullopt;
}

DatasetManifest mix(const DatasetManifest& sim, const DatasetManifest& real, const MixSpec& spec) {
    spec.validate();
    DatasetManifest out;
    out.seed = spec.seed;
    out.model_id = spec.model_id;
    out.metadata = {{"sim_count", spec.sim_count}, {"real_count", spec.real_count}};

    auto take = [&](const DatasetManifest& source, Domain domain, std::size_t want) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < source.entries.size(); ++i)
            if (source.entries[i].domain == domain) pool.push_back(i);
        if (pool.size() < want)
            throw ValidationError(std::string(domain_name(domain)),
                                  "source has " + std::to_string(pool.size()) + " entries, " + std::to_string(want) +
                                      " requested (short by " + std::to_string(want - pool.size()) + ")");
        Stream rng(spec.seed, {fnv1a64("mix"), fnv1a64(domain_name(domain))});
        for (std::size_t i = 0; i < want; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(want);
        std::sort(pool.begin(), pool.end());
        for (std::size_t i : pool) {
            ManifestEntry e = source.entries[i];
            e.image = fs::absolute(source.resolve(e.image)).lexically_normal().string();
            e.mask = fs::absolute(source.resolve(e.mask)).lexically_normal().string();
            out.entries.push_back(std::move(e));
        }
    };
    take(sim, Domain::sim, spec.sim_count);
    take(real, Domain::real, spec.real_count);
    return out;
}

double relative_percentage(const MixSpec& spec) {
    if (spec.sim_count == 0) throw ValidationError("sim_count", "relative percentage is undefined without simulated data");
    return 100.0 * static_cast<double>(spec.real_count) / static_cast<double>(spec.sim_count);
}

double relative_percentage(const DatasetManifest& manifest) {
    MixSpec spec;
    spec.sim_count = manifest.count(Domain::sim);
    spec.real_count = manifest.count(Domain::real);
    return relative_percentage(spec);
}

std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest, double train_fraction,
                                                  std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        throw ValidationError("fraction", "must lie in [0, 1]");
    // stratum -> ordered base ids (first appearance)
    std::map<std::string, std::vector<std::string>> strata;
    std::set<std::string> known;
    for (const ManifestEntry& e : manifest.entries) {
        if (!known.insert(e.base_id).second) continue;
        const std::string stratum = e.category ? std::string(1, to_char(*e.category)) : "none";
        strata[stratum].push_back(e.base_id);
    }
    std::set<std::string> train_ids;
    for (auto& [stratum, ids] : strata) {
        Stream rng(seed, {fnv1a64("split"), fnv1a64(stratum)});
        for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
        train_ids.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    }
    DatasetManifest train;
    DatasetManifest test;
    for (DatasetManifest* m : {&train, &test}) {
        m->seed = seed;
        m->model_id = manifest.model_id;
        m->metadata = manifest.metadata;
        m->root = manifest.root;
    }
    for (const ManifestEntry& e : manifest.entries) (train_ids.count(e.base_id) ? train : test).entries.push_back(e);
    return {std::move(train), std::move(test)};
}

}  // namespace cropforge
