#include <gtest/gtest.h>

#include <set>

#include "cropforge/dataset.hpp"
#include "cropforge/error.hpp"
#include "cropforge/generate.hpp"
#include "cropforge/image_io.hpp"
#include "test_support.hpp"

using namespace cropforge;
namespace fs = std::filesystem;

namespace {

DatasetManifest synthetic_manifest(std::size_t sim, std::size_t real) {
    DatasetManifest m;
    for (std::size_t i = 0; i < sim + real; ++i) {
        ManifestEntry e;
        const bool is_real = i >= sim;
        e.base_id = (is_real ? "real-" : "sim-") + std::to_string(i);
        e.image = "images/" + e.base_id + ".png";
        e.mask = "masks/" + e.base_id + ".png";
        e.domain = is_real ? Domain::real : Domain::sim;
        m.entries.push_back(e);
    }
    m.root = "/data";
    return m;
}

SamplePair rendered_pair(std::uint64_t seed, std::size_t index, GenerateOptions* opts = nullptr,
                         SamplePlan* plan_out = nullptr) {
    GenerateOptions o;
    o.seed = seed;
    const SamplePlan plan = plan_sample(o, index);
    if (opts) *opts = o;
    if (plan_out) *plan_out = plan;
    return render_sample(o, plan);
}

}  // namespace

TEST(Manifest, RoundTripsThroughDisk) {
    support::TempDir dir;
    DatasetManifest m = synthetic_manifest(3, 2);
    m.entries[1].category = Category::tyre_tracks;
    m.entries[2].augmentation_index = 3;
    m.seed = 77;
    m.model_id = "A2";
    m.metadata = {{"note", "x"}};
    m.root = dir.path();
    write_manifest(m, dir.path());
    const DatasetManifest back = read_manifest(dir.path());
    EXPECT_TRUE(back.same_content(m));
    EXPECT_EQ(back.root, dir.path());
    EXPECT_TRUE(read_manifest(dir / "manifest.json").same_content(m));
    EXPECT_FALSE(fs::exists(dir / ".manifest.json.tmp"));
}

TEST(Manifest, RejectsUnknownSchemaAndValues) {
    nlohmann::json j = synthetic_manifest(1, 0).to_json();
    j["schema"] = 2;
    EXPECT_THROW(DatasetManifest::from_json(j), ValidationError);
    j = synthetic_manifest(1, 0).to_json();
    j["entries"][0]["domain"] = "synthetic";
    EXPECT_THROW(DatasetManifest::from_json(j), ValidationError);
    j = synthetic_manifest(1, 0).to_json();
    j["entries"][0]["category"] = "z";
    EXPECT_THROW(DatasetManifest::from_json(j), ValidationError);
    j = synthetic_manifest(1, 0).to_json();
    j["entries"][0]["augmentation_index"] = 4;
    EXPECT_THROW(DatasetManifest::from_json(j), ValidationError);
}

TEST(Manifest, ValidateReportsMissingDuplicateAndGreyMasks) {
    support::TempDir dir;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    DatasetManifest m = synthetic_manifest(3, 0);
    m.root = dir.path();
    for (const ManifestEntry& e : m.entries) {
        write_png(dir / e.image, cv::Mat(8, 8, CV_8UC3, cv::Scalar(1, 2, 3)));
        write_png(dir / e.mask, cv::Mat(8, 8, CV_8UC1, cv::Scalar(255)));
    }
    EXPECT_TRUE(validate(m, true).ok());

    write_png(dir / m.entries[0].mask, cv::Mat(8, 8, CV_8UC1, cv::Scalar(128)));
    fs::remove(dir / m.entries[1].image);
    m.entries.push_back(m.entries[2]);
    const ValidationReport r = validate(m, true);
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.entry_count, 4u);
    EXPECT_EQ(r.missing_files.size(), 1u);
    EXPECT_EQ(r.duplicate_ids.size(), 1u);
    EXPECT_EQ(r.non_binary_masks.size(), 1u);
    EXPECT_TRUE(validate(m, false).non_binary_masks.empty());
}

TEST(Augment, FourFullSizeCrops) {
    const SamplePair p = rendered_pair(1, 0);
    const auto crops = augment_crops(p);
    for (const SamplePair& c : crops) {
        EXPECT_EQ(c.rgb.size(), cv::Size(512, 512));
        EXPECT_EQ(c.mask.size(), cv::Size(512, 512));
        EXPECT_TRUE(is_binary_mask(c.mask));
    }
    // four distinct views
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) EXPECT_GT(cv::norm(crops[i].rgb, crops[j].rgb, cv::NORM_L1), 0.0);
}

TEST(Augment, ZeroMaskStaysZero) {
    SamplePair p;
    p.rgb = cv::Mat(512, 512, CV_8UC3, cv::Scalar(10, 20, 30));
    p.mask = cv::Mat::zeros(512, 512, CV_8UC1);
    for (const SamplePair& c : augment_crops(p)) EXPECT_EQ(cv::countNonZero(c.mask), 0);
}

TEST(Augment, CornerCropsMapPixelsExactly) {
    // mask with a single marked pixel in each quadrant's exclusive corner
    SamplePair p;
    p.rgb = cv::Mat(512, 512, CV_8UC3, cv::Scalar(0, 0, 0));
    p.mask = cv::Mat::zeros(512, 512, CV_8UC1);
    p.mask(cv::Rect(0, 0, 3, 3)).setTo(255);      // only in TL
    p.mask(cv::Rect(509, 509, 3, 3)).setTo(255);  // only in BR
    const auto c = augment_crops(p);
    EXPECT_EQ(c[0].mask.at<std::uint8_t>(0, 0), 255);
    EXPECT_EQ(cv::countNonZero(c[1].mask), 0);
    EXPECT_EQ(cv::countNonZero(c[2].mask), 0);
    EXPECT_EQ(c[3].mask.at<std::uint8_t>(511, 511), 255);
}

TEST(Augment, UndersizedInputThrows) {
    SamplePair p;
    p.rgb = cv::Mat(300, 300, CV_8UC3, cv::Scalar(0));
    p.mask = cv::Mat::zeros(300, 300, CV_8UC1);
    EXPECT_THROW(augment_crops(p), ValidationError);
    CropOptions small;
    small.output_size = 200;
    EXPECT_NO_THROW(augment_crops(p, small));
}

TEST(Augment, CropsPreserveCoregistration) {
    GenerateOptions o;
    SamplePlan plan;
    const SamplePair p = rendered_pair(9, 3, &o, &plan);
    const auto crops = augment_crops(p);
    const double cw = 384.0;
    const double scale = 512.0 / cw;
    const std::array<cv::Point2d, 4> origin = {cv::Point2d(0, 0), cv::Point2d(128, 0), cv::Point2d(0, 128),
                                               cv::Point2d(128, 128)};
    int checked = 0;
    for (const RowCenterline& row : plan.layout.rows)
        for (int s = 0; s <= 600; ++s) {
            const cv::Point3d w = row.polyline.front() + (row.polyline.back() - row.polyline.front()) * (s / 600.0);
            const Projection pr = project(w, plan.pose, o.intrinsics);
            if (!pr.inside(o.intrinsics)) continue;
            for (int k = 0; k < 4; ++k) {
                const cv::Point2d rel = pr.pixel - origin[static_cast<std::size_t>(k)];
                if (rel.x < 0 || rel.y < 0 || rel.x >= cw || rel.y >= cw) continue;
                const cv::Point2d q = rel * scale;
                bool hit = false;
                for (int dy = -1; dy <= 1 && !hit; ++dy)
                    for (int dx = -1; dx <= 1 && !hit; ++dx) {
                        const int x = std::clamp(static_cast<int>(q.x) + dx, 0, 511);
                        const int y = std::clamp(static_cast<int>(q.y) + dy, 0, 511);
                        hit = crops[static_cast<std::size_t>(k)].mask.at<std::uint8_t>(y, x) == 255;
                    }
                ++checked;
                EXPECT_TRUE(hit) << "crop " << k << " at " << q;
            }
        }
    EXPECT_GT(checked, 100);
}

TEST(Mix, PresetTableMatchesReferenceCounts) {
    const auto& presets = mix_presets();
    const auto& table = support::mix_table();
    ASSERT_EQ(presets.size(), table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        EXPECT_EQ(presets[i].model_id, table[i].model_id);
        EXPECT_EQ(presets[i].sim_count, static_cast<std::size_t>(table[i].sim));
        EXPECT_EQ(presets[i].real_count, static_cast<std::size_t>(table[i].real));
    }
    EXPECT_TRUE(find_preset("B6").has_value());
    EXPECT_FALSE(find_preset("C1").has_value());
}

TEST(Mix, PresetA2SelectsRequestedCounts) {
    const DatasetManifest src = synthetic_manifest(800, 300);
    MixSpec spec = *find_preset("A2");
    spec.seed = 4;
    const DatasetManifest m = mix(src, src, spec);
    EXPECT_EQ(m.count(Domain::sim), 500u);
    EXPECT_EQ(m.count(Domain::real), 50u);
    EXPECT_EQ(m.model_id, "A2");
    std::set<std::string> ids;
    for (const ManifestEntry& e : m.entries) ids.insert(e.base_id);
    EXPECT_EQ(ids.size(), m.entries.size());
}

TEST(Mix, PresetRIsAllReal) {
    const DatasetManifest real = synthetic_manifest(0, 750);
    const DatasetManifest m = mix(DatasetManifest{}, real, *find_preset("R"));
    EXPECT_EQ(m.count(Domain::sim), 0u);
    EXPECT_EQ(m.count(Domain::real), 750u);
}

TEST(Mix, ZeroRealCountAcceptsEmptyRealSource) {
    MixSpec spec{"A1", 10, 0, 0};
    const DatasetManifest m = mix(synthetic_manifest(20, 0), DatasetManifest{}, spec);
    EXPECT_EQ(m.entries.size(), 10u);
}

TEST(Mix, ShortfallNamesDomain) {
    MixSpec spec{"x", 5, 10, 0};
    try {
        mix(synthetic_manifest(5, 4), synthetic_manifest(0, 4), spec);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "real");
        EXPECT_NE(std::string(e.what()).find("short by 6"), std::string::npos);
    }
    EXPECT_THROW(mix(DatasetManifest{}, DatasetManifest{}, MixSpec{"empty", 0, 0, 0}), ValidationError);
}

TEST(Mix, DeterministicPerSeedAndPercentageConsistent) {
    const DatasetManifest src = synthetic_manifest(300, 200);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const MixSpec spec{"s", 100 + seed, 3 * seed + 1, seed};
        const DatasetManifest a = mix(src, src, spec);
        EXPECT_TRUE(a.same_content(mix(src, src, spec)));
        EXPECT_EQ(relative_percentage(a), relative_percentage(spec));
    }
    const DatasetManifest a = mix(src, src, MixSpec{"s", 50, 20, 1});
    const DatasetManifest b = mix(src, src, MixSpec{"s", 50, 20, 2});
    EXPECT_FALSE(a.same_content(b));
}

TEST(Mix, SelectedPathsResolveAgainstSource) {
    const DatasetManifest m = mix(synthetic_manifest(2, 0), DatasetManifest{}, MixSpec{"s", 1, 0, 0});
    EXPECT_EQ(fs::path(m.entries[0].image).parent_path(), fs::path("/data/images"));
}

TEST(RelativePercentage, ReferenceCompositions) {
    EXPECT_EQ(relative_percentage(*find_preset("B6")), 50.0);
    EXPECT_EQ(relative_percentage(*find_preset("A1")), 0.0);
    EXPECT_EQ(relative_percentage(*find_preset("A3")), 20.0);
    EXPECT_THROW(relative_percentage(*find_preset("R")), ValidationError);
}

TEST(Split, HalfOfAugmentedSet) {
    DatasetManifest m;
    for (int b = 0; b < 500; ++b)
        for (int k = 0; k < 4; ++k) {
            ManifestEntry e;
            e.base_id = "b" + std::to_string(b);
            e.augmentation_index = k;
            e.image = e.base_id + "_" + std::to_string(k) + ".png";
            e.mask = e.image;
            m.entries.push_back(e);
        }
    const auto [train, test] = split(m, 0.5, 3);
    EXPECT_EQ(train.entries.size(), 1000u);
    EXPECT_EQ(test.entries.size(), 1000u);
    std::set<std::string> train_ids;
    for (const ManifestEntry& e : train.entries) train_ids.insert(e.base_id);
    for (const ManifestEntry& e : test.entries) EXPECT_EQ(train_ids.count(e.base_id), 0u);
    EXPECT_EQ(train_ids.size(), 250u);
    const auto again = split(m, 0.5, 3);
    EXPECT_TRUE(again.first.same_content(train));
}

TEST(Split, FullFractionLeavesTestEmpty) {
    const auto [train, test] = split(synthetic_manifest(10, 5), 1.0, 0);
    EXPECT_EQ(train.entries.size(), 15u);
    EXPECT_TRUE(test.entries.empty());
    EXPECT_THROW(split(synthetic_manifest(1, 0), 1.5, 0), ValidationError);
}

TEST(Split, StratifiedByCategory) {
    DatasetManifest m;
    for (Category c : kAllCategories)
        for (int i = 0; i < 100; ++i) {
            ManifestEntry e;
            e.category = c;
            e.base_id = std::string(1, to_char(c)) + std::to_string(i);
            e.image = e.mask = e.base_id + ".png";
            m.entries.push_back(e);
        }
    const auto [train, test] = split(m, 0.75, 11);
    std::map<Category, int> per;
    for (const ManifestEntry& e : train.entries) ++per[*e.category];
    for (Category c : kAllCategories) EXPECT_EQ(per[c], 75) << to_char(c);
    EXPECT_EQ(test.entries.size(), 250u);
}
