#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cropforge/baseline_detector.hpp"
#include "cropforge/dataset.hpp"
#include "cropforge/error.hpp"
#include "cropforge/generate.hpp"
#include "cropforge/image_io.hpp"
#include "cropforge/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cropforge;

namespace {

struct Common {
    bool json_out = false;
    int verbosity = 0;
};

void progress_line(const Common& common, const std::string& what, std::size_t done, std::size_t total) {
    if (common.verbosity < 0) return;
    std::cerr << '\r' << what << ' ' << done << '/' << total << std::flush;
    if (done == total) std::cerr << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<Category> parse_category_list(const std::string& list) {
    std::vector<Category> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(category_from_id(item));
    return out;
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string config;
    std::optional<std::size_t> count;
    std::string category;
    std::string categories;
    std::string style;
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 1;
    bool augment = false;
};

int cmd_generate(const GenerateArgs& a, const Common& common) {
    GenerateOptions options = a.config.empty() ? GenerateOptions{} : GenerateOptions::from_json(read_json_file(a.config));
    if (a.count) options.count = *a.count;
    if (!a.category.empty() && !a.categories.empty())
        throw ValidationError("categories", "give --category or --categories, not both");
    if (!a.category.empty()) options.categories = {category_from_id(a.category)};
    if (!a.categories.empty()) options.categories = parse_category_list(a.categories);
    if (!a.style.empty()) options.style_id = a.style;
    if (a.seed) options.seed = *a.seed;
    if (a.augment) options.augment = true;
    options.validate();

    const DatasetManifest m = generate_dataset(options, a.out, a.jobs, [&](std::size_t done, std::size_t total) {
        progress_line(common, "generate", done, total);
    });
    if (common.json_out)
        std::cout << json{{"out", a.out}, {"entries", m.entries.size()}, {"seed", m.seed}}.dump() << '\n';
    else
        std::cout << "wrote " << m.entries.size() << " pairs to " << a.out << '\n';
    return 0;
}

// --- mix --------------------------------------------------------------------

struct MixArgs {
    std::string sim;
    std::string real;
    std::string preset;
    std::string model_id;
    std::optional<std::size_t> sim_count;
    std::optional<std::size_t> real_count;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool list = false;
};

int cmd_mix(const MixArgs& a, const Common& common) {
    if (a.list) {
        json j = json::array();
        for (const MixSpec& p : mix_presets())
            j.push_back({{"model_id", p.model_id}, {"sim_count", p.sim_count}, {"real_count", p.real_count}});
        if (common.json_out) {
            std::cout << j.dump() << '\n';
        } else {
            for (const MixSpec& p : mix_presets())
                std::cout << p.model_id << '\t' << p.sim_count << '\t' << p.real_count << '\n';
        }
        return 0;
    }
    MixSpec spec;
    if (!a.preset.empty()) {
        if (a.sim_count || a.real_count) throw ValidationError("preset", "give --preset or explicit counts, not both");
        const auto p = find_preset(a.preset);
        if (!p) throw ValidationError("preset", "unknown preset '" + a.preset + "' (A1..A6, B1..B6, R)");
        spec = *p;
    } else {
        if (!a.sim_count || !a.real_count)
            throw ValidationError("sim_count", "need --preset or both --sim-count and --real-count");
        spec.model_id = a.model_id.empty() ? "custom" : a.model_id;
        spec.sim_count = *a.sim_count;
        spec.real_count = *a.real_count;
    }
    if (!a.model_id.empty()) spec.model_id = a.model_id;
    spec.seed = a.seed.value_or(0);
    if (a.out.empty()) throw ValidationError("out", "output directory required");

    const DatasetManifest sim = spec.sim_count > 0 || !a.sim.empty() ? read_manifest(a.sim) : DatasetManifest{};
    const DatasetManifest real = spec.real_count > 0 || !a.real.empty() ? read_manifest(a.real) : DatasetManifest{};
    const DatasetManifest mixed = mix(sim, real, spec);
    fs::create_directories(a.out);
    write_manifest(mixed, a.out);
    if (common.json_out)
        std::cout << json{{"model_id", spec.model_id},
                          {"sim_count", mixed.count(Domain::sim)},
                          {"real_count", mixed.count(Domain::real)},
                          {"out", a.out}}
                         .dump()
                  << '\n';
    else
        std::cout << spec.model_id << ": " << mixed.count(Domain::sim) << " sim + " << mixed.count(Domain::real)
                  << " real -> " << a.out << '\n';
    return 0;
}

// --- detect -----------------------------------------------------------------

struct DetectArgs {
    std::string dataset;
    std::string out;
    std::string config;
    int jobs = 1;
};

DetectorParams detector_params_from_json(const json& j) {
    DetectorParams p;
    if (!j.contains("schema") || j.at("schema") != 1)
        throw ValidationError("schema", "config must declare \"schema\": 1");
    const json d = j.value("detector", json::object());
    for (const auto& [key, value] : d.items()) {
        if (key == "line_width_px")
            p.line_width_px = value.get<double>();
        else if (key == "min_angle_from_horizontal_deg")
            p.min_angle_from_horizontal_deg = value.get<double>();
        else if (key == "refine_band_px")
            p.refine_band_px = value.get<double>();
        else if (key == "refine_iterations")
            p.refine_iterations = value.get<int>();
        else if (key == "exg_min_level")
            p.binarize.min_level = value.get<double>();
        else if (key == "angle_bins")
            p.hough.angle_bins = value.get<int>();
        else if (key == "rho_resolution_px")
            p.hough.rho_resolution_px = value.get<double>();
        else if (key == "vote_fraction")
            p.hough.vote_fraction = value.get<double>();
        else if (key == "min_votes")
            p.hough.min_votes = value.get<int>();
        else if (key == "max_lines")
            p.hough.max_lines = value.get<int>();
        else if (key == "nms_theta_deg")
            p.hough.nms_theta_deg = value.get<double>();
        else if (key == "nms_rho_px")
            p.hough.nms_rho_px = value.get<double>();
        else
            throw ValidationError("detector." + key, "unknown key");
    }
    return p;
}

int cmd_detect(const DetectArgs& a, const Common& common) {
    const DetectorParams params =
        a.config.empty() ? DetectorParams{} : detector_params_from_json(read_json_file(a.config));
    const DatasetManifest m = read_manifest(a.dataset);
    const fs::path out(a.out);
    fs::create_directories(out / "masks");
    fs::create_directories(out / "lines");

    std::mutex progress_mutex;
    std::size_t done = 0;
    parallel_for(m.entries.size(), a.jobs, [&](std::size_t i) {
        const ManifestEntry& e = m.entries[i];
        const Detection d = detect_rows(read_color_png(m.resolve(e.image)), params);
        const std::string name = fs::path(e.mask).filename().string();
        write_png(out / "masks" / name, d.mask);
        json sidecar = {{"image", e.image}, {"lines", to_json(d.lines)}};
        write_text_file(out / "lines" / (fs::path(name).stem().string() + ".json"), sidecar.dump(2) + "\n");
        std::lock_guard lock(progress_mutex);
        progress_line(common, "detect", ++done, m.entries.size());
    });
    const json run = {{"predictor", "baseline_detector"},
                      {"dataset", a.dataset},
                      {"count", m.entries.size()},
                      {"line_width_px", params.line_width_px}};
    write_text_file(out / "run.json", run.dump(2) + "\n");
    if (common.json_out)
        std::cout << json{{"out", a.out}, {"predictions", m.entries.size()}}.dump() << '\n';
    else
        std::cout << "wrote " << m.entries.size() << " predictions to " << a.out << '\n';
    return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string out;
    std::string model_id;
    int threshold = kDefaultBinarizeLevel;
    double theta_p = ScoreParams{}.theta_p;
    double theta_b = ScoreParams{}.theta_b;
    double success = kCategorySuccessIou;
    bool per_category = false;
};

// Predictions pair with ground truth by mask filename: <pred>/masks/<name>,
// falling back to <pred>/<name>.
fs::path prediction_path(const fs::path& root, const std::string& gt_mask) {
    const fs::path name = fs::path(gt_mask).filename();
    const fs::path nested = root / "masks" / name;
    if (fs::exists(nested)) return nested;
    const fs::path flat = root / name;
    if (fs::exists(flat)) return flat;
    throw Error("no prediction for " + gt_mask + " under " + root.string());
}

int cmd_eval(const EvalArgs& a, const Common& common) {
    if (a.threshold < 0 || a.threshold > 255) throw ValidationError("threshold", "must be in [0, 255]");
    const DatasetManifest gt = read_manifest(a.gt);
    Evaluator ev(ScoreParams{a.theta_p, a.theta_b}, a.success);
    for (const ManifestEntry& e : gt.entries) {
        const cv::Mat truth = read_gray_png(gt.resolve(e.mask));
        const cv::Mat pred = read_gray_png(prediction_path(a.pred, e.mask));
        ev.add(confusion(pred, truth, a.threshold), e.category);
    }
    std::optional<std::string> model_id;
    if (!a.model_id.empty())
        model_id = a.model_id;
    else if (gt.model_id)
        model_id = gt.model_id;
    const EvalReport report = ev.report(a.per_category, model_id);
    json j = report.to_json();
    j["threshold"] = a.threshold;
    if (!a.out.empty()) write_text_file(a.out, j.dump(2) + "\n");
    if (common.json_out)
        std::cout << j.dump() << '\n';
    else
        std::cout << report.to_table();
    return 0;
}

// --- curve ------------------------------------------------------------------

struct CurveArgs {
    std::string runs;
    std::string out_csv;
    std::string out_json;
    double theta_p = ScoreParams{}.theta_p;
    double theta_b = ScoreParams{}.theta_b;
};

// runs.json: [{"model_id": "A3", "iou": 0.12}, ...]. Counts come from the
// preset of the same name unless "sim_count"/"real_count" are given. Runs
// without simulated data (R) have no relative percentage and are skipped.
std::vector<CurveRun> read_runs(const json& j, const Common& common) {
    const json& list = j.is_object() && j.contains("runs") ? j.at("runs") : j;
    if (!list.is_array()) throw ValidationError("runs", "expected an array of runs");
    std::vector<CurveRun> runs;
    for (const json& r : list) {
        CurveRun run;
        run.spec.model_id = r.at("model_id").get<std::string>();
        run.iou = r.at("iou").get<double>();
        if (r.contains("sim_count") || r.contains("real_count")) {
            run.spec.sim_count = r.at("sim_count").get<std::size_t>();
            run.spec.real_count = r.at("real_count").get<std::size_t>();
        } else {
            const auto p = find_preset(run.spec.model_id);
            if (!p) throw ValidationError("runs." + run.spec.model_id, "not a preset; give sim_count and real_count");
            run.spec.sim_count = p->sim_count;
            run.spec.real_count = p->real_count;
        }
        if (run.spec.sim_count == 0) {
            if (common.verbosity >= 0)
                std::cerr << "curve: skipping " << run.spec.model_id << " (no simulated samples)\n";
            continue;
        }
        runs.push_back(run);
    }
    return runs;
}

int cmd_curve(const CurveArgs& a, const Common& common) {
    const std::vector<CurvePoint> curve =
        score_curve(read_runs(read_json_file(a.runs), common), ScoreParams{a.theta_p, a.theta_b});
    const std::string csv = curve_csv(curve);
    const json j = curve_json(curve);
    if (!a.out_csv.empty()) write_text_file(a.out_csv, csv);
    if (!a.out_json.empty()) write_text_file(a.out_json, j.dump(2) + "\n");
    if (common.json_out)
        std::cout << j.dump() << '\n';
    else if (a.out_csv.empty())
        std::cout << csv;
    return 0;
}

// --- validate ---------------------------------------------------------------

struct ValidateArgs {
    std::string manifest;
    bool check_masks = false;
};

int cmd_validate(const ValidateArgs& a, const Common& common) {
    const ValidationReport r = validate(read_manifest(a.manifest), a.check_masks);
    if (common.json_out) {
        json j = r.to_json();
        j["ok"] = r.ok();
        std::cout << j.dump() << '\n';
    } else {
        std::cout << r.entry_count << " entries: " << (r.ok() ? "ok" : "INVALID") << '\n';
        for (const auto& f : r.missing_files) std::cout << "  missing " << f << '\n';
        for (const auto& d : r.duplicate_ids) std::cout << "  duplicate " << d << '\n';
        for (const auto& m : r.non_binary_masks) std::cout << "  non-binary " << m << '\n';
    }
    return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cropforge: synthetic crop-row datasets, baseline detection and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_flag("--json", common.json_out, "Machine-readable JSON on stdout");
    app.add_flag("-v,--verbose", common.verbosity, "More progress output on stderr");
    app.add_flag_function("-q,--quiet", [&](std::int64_t) { common.verbosity = -1; }, "No progress output");

    std::optional<std::uint64_t> seed;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Random seed (falls back to $CROPFORGE_SEED)")->envname("CROPFORGE_SEED");
    };
    auto add_jobs = [](CLI::App* sub, int& jobs) {
        sub->add_option("-j,--jobs", jobs, "Worker threads; output does not depend on it")
            ->check(CLI::Range(1, 1024));
    };

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Render image/mask pairs and a manifest");
    g->add_option("--config", gen.config, "Generator config JSON (\"schema\": 1)")->check(CLI::ExistingFile);
    g->add_option("-n,--count", gen.count, "Number of scenes");
    g->add_option("--category", gen.category, "Single variation category a..j");
    g->add_option("--categories", gen.categories, "Comma-separated categories, split evenly (round-robin)");
    g->add_option("--style", gen.style, "Render style: sim | real-proxy");
    g->add_option("-o,--out", gen.out, "Output dataset directory")->required();
    g->add_flag("--augment", gen.augment, "Also emit the four corner crops per scene");
    add_seed(g);
    add_jobs(g, gen.jobs);

    MixArgs mx;
    auto* m = app.add_subcommand("mix", "Compose a training manifest from sim and real datasets");
    m->add_option("--sim", mx.sim, "Simulated dataset (directory or manifest)");
    m->add_option("--real", mx.real, "Real dataset (directory or manifest)");
    m->add_option("--preset", mx.preset, "Named composition A1..A6, B1..B6, R");
    m->add_option("--model-id", mx.model_id, "Model id recorded in the manifest");
    m->add_option("--sim-count", mx.sim_count, "Explicit simulated sample count");
    m->add_option("--real-count", mx.real_count, "Explicit real sample count");
    m->add_option("-o,--out", mx.out, "Output directory for manifest.json");
    m->add_flag("--list-presets", mx.list, "Print the preset table and exit");
    add_seed(m);

    DetectArgs det;
    auto* d = app.add_subcommand("detect", "Run the baseline row detector over a dataset");
    d->add_option("dataset", det.dataset, "Dataset directory or manifest")->required();
    d->add_option("-o,--out", det.out, "Prediction directory")->required();
    d->add_option("--config", det.config, "Detector config JSON (\"schema\": 1)")->check(CLI::ExistingFile);
    add_seed(d);
    add_jobs(d, det.jobs);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Score predicted masks against a ground-truth manifest");
    e->add_option("--pred", ev.pred, "Prediction directory")->required();
    e->add_option("--gt", ev.gt, "Ground-truth dataset directory or manifest")->required();
    e->add_option("-o,--out", ev.out, "Write the JSON report here");
    e->add_option("--model-id", ev.model_id, "Model id for the report");
    e->add_option("--threshold", ev.threshold, "Prediction binarisation level (positive when >=)");
    e->add_option("--theta-p", ev.theta_p, "Peak IoU of the reference model");
    e->add_option("--theta-b", ev.theta_b, "Baseline IoU of the reference model");
    e->add_option("--success-iou", ev.success, "Per-category success threshold");
    e->add_flag("--per-category", ev.per_category, "Per-category IoU and model score");
    add_seed(e);

    CurveArgs cu;
    auto* c = app.add_subcommand("curve", "Performance score vs relative percentage");
    c->add_option("runs", cu.runs, "runs.json")->required()->check(CLI::ExistingFile);
    c->add_option("-o,--out", cu.out_csv, "CSV output");
    c->add_option("--out-json", cu.out_json, "JSON output");
    c->add_option("--theta-p", cu.theta_p, "Peak IoU of the reference model");
    c->add_option("--theta-b", cu.theta_b, "Baseline IoU of the reference model");
    add_seed(c);

    ValidateArgs va;
    auto* v = app.add_subcommand("validate", "Check a manifest and its files");
    v->add_option("manifest", va.manifest, "Dataset directory or manifest")->required();
    v->add_flag("--check-masks", va.check_masks, "Load every mask and check it is {0, 255}");
    add_seed(v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err);
    }

    try {
        if (*g) {
            gen.seed = seed;
            return cmd_generate(gen, common);
        }
        if (*m) {
            mx.seed = seed;
            return cmd_mix(mx, common);
        }
        if (*d) return cmd_detect(det, common);
        if (*e) return cmd_eval(ev, common);
        if (*c) return cmd_curve(cu, common);
        if (*v) return cmd_validate(va, common);
    } catch (const std::exception& err) {
        std::cerr << "cropforge: " << err.what() << '\n';
        return 1;
    }
    return 1;
}
