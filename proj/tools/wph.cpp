#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wph.hpp"

namespace fs = std::filesystem;

namespace {

// Flags that map one-to-one onto config keys. Values are applied on top of
// --config in a fixed order after parsing.
struct ConfigFlags {
    std::optional<std::string> config_file;
    std::map<std::string, std::string> values;

    void add(CLI::App* app, const std::string& key, const std::string& help) {
        std::string flag = "--" + key;
        for (auto& ch : flag) {
            if (ch == '_') ch = '-';
        }
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }

    void add_channel_flags(CLI::App* app) {
        app->add_option("--config", config_file, "key = value config file");
        add(app, "family", "wavelet family: haar, db2, db4");
        add(app, "depth", "decomposition depth J (1-3)");
        add(app, "h1_pct", "fraction of H1 bars kept, in (0, 1]");
        add(app, "epsilon", "gate regularizer (> 0)");
        add(app, "max_side", "longest side of the persistence grid");
        add(app, "side", "wavelet grid side S (power of two)");
        add(app, "mask", "Otsu foreground mask: true or false");
        add(app, "h1_order", "which H1 bars survive truncation: top or lowest");
        add(app, "diagram_source", "diagram used for wavelet channels: image or wavelet");
        add(app, "seed", "random seed");
        add(app, "aggregate", "patient embedding aggregation: mean or max");
        add(app, "score_aggregate", "patient score aggregation: mean or max");
        add(app, "workers", "worker threads");
    }

    wph::RunConfig resolve() const {
        wph::RunConfig cfg = config_file ? wph::load_config(*config_file) : wph::RunConfig{};
        for (const auto& [k, v] : values) wph::set_config_value(cfg, k, v);
        cfg.validate();
        return cfg;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw wph::Error("cannot write " + path.string());
    out << text;
}

template <typename T>
std::vector<T> parse_list(const std::string& csv, T (*parse)(const std::string&)) {
    std::vector<T> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(parse(item));
    }
    if (out.empty()) throw wph::ConfigError("empty list '" + csv + "'");
    return out;
}

int parse_int(const std::string& s) { return wph::detail::parse_number<int>("grid", s); }
double parse_double(const std::string& s) { return wph::detail::parse_number<double>("grid", s); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wavelet-persistence channel maps for grayscale images"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(wph::kVersion));

    // extract
    ConfigFlags extract_flags;
    std::string extract_in, extract_out;
    bool extract_concat = false, extract_pyramid = false;
    auto* extract = app.add_subcommand("extract", "compute channel stacks for every image in a directory");
    extract_flags.add_channel_flags(extract);
    extract->add_option("--input,-i", extract_in, "image directory")->required();
    extract->add_option("--output,-o", extract_out, "run directory")->required();
    extract->add_flag("--concat", extract_concat, "also write the 9-channel tensor with the image first");
    extract->add_flag("--dump-pyramid", extract_pyramid, "write every wavelet subband");

    // ablate
    ConfigFlags ablate_flags;
    std::string ablate_in, ablate_out, grid_mode = "full";
    std::string families = "haar,db2,db4", depths = "1,2,3", retentions = "0.1,0.25,0.5";
    int patients = 40, per_patient = 2, size = 64, n_boot = 1000;
    double train_fraction = 0.6;
    auto* ablate = app.add_subcommand("ablate", "probe AUC over a family x depth x retention grid");
    ablate_flags.add_channel_flags(ablate);
    ablate->add_option("--input,-i", ablate_in, "labelled image directory (default: synthetic corpus)");
    ablate->add_option("--output,-o", ablate_out, "run directory")->required();
    ablate->add_option("--grid", grid_mode, "full or marginal")->check(CLI::IsMember({"full", "marginal"}));
    ablate->add_option("--families", families, "comma separated families");
    ablate->add_option("--depths", depths, "comma separated depths");
    ablate->add_option("--retentions", retentions, "comma separated H1 retentions");
    ablate->add_option("--patients", patients, "synthetic corpus: patients")->check(CLI::PositiveNumber);
    ablate->add_option("--images-per-patient", per_patient, "synthetic corpus: images per patient")->check(CLI::PositiveNumber);
    ablate->add_option("--size", size, "synthetic corpus: image height")->check(CLI::Range(8, 4096));
    ablate->add_option("--train-fraction", train_fraction, "patients used for training");
    ablate->add_option("--n-boot", n_boot, "bootstrap resamples")->check(CLI::PositiveNumber);

    // verify
    std::size_t trials = 100;
    std::uint64_t verify_seed = 0;
    double verify_eps = 1e-6;
    std::string verify_family = "haar", verify_out;
    int verify_depth = 2, verify_side = 256;
    auto* verify = app.add_subcommand("verify", "run the randomized stability and correctness checks");
    verify->add_option("--trials", trials, "trial scale (>= 1)")->check(CLI::PositiveNumber);
    verify->add_option("--seed", verify_seed, "random seed");
    verify->add_option("--epsilon", verify_eps, "gate regularizer")->check(CLI::PositiveNumber);
    verify->add_option("--family", verify_family, "wavelet family for the map checks");
    verify->add_option("--depth", verify_depth, "wavelet depth for the map checks");
    verify->add_option("--side", verify_side, "image side for the wavelet checks");
    verify->add_option("--output,-o", verify_out, "also write the report to this file");

    // probe
    std::string probe_in, probe_out, probe_aggregate = "mean";
    std::uint64_t probe_seed = 0;
    int probe_boot = 1000;
    double probe_fraction = 0.6;
    auto* probe = app.add_subcommand("probe", "fit and evaluate the logistic probe on an extract run");
    probe->add_option("--input,-i", probe_in, "extract run directory or embeddings.tsv")->required();
    probe->add_option("--output,-o", probe_out, "run directory")->required();
    probe->add_option("--aggregate", probe_aggregate, "patient embedding aggregation: mean or max");
    probe->add_option("--seed", probe_seed, "split and bootstrap seed");
    probe->add_option("--train-fraction", probe_fraction, "patients used for training");
    probe->add_option("--n-boot", probe_boot, "bootstrap resamples")->check(CLI::PositiveNumber);

    // dist
    std::string dist_a, dist_b, dist_kind = "clouds", dist_out, dist_aggregate = "mean";
    std::size_t n_sub = 512;
    std::uint64_t dist_seed = 0;
    auto* dist = app.add_subcommand("dist", "distances between two corpora or two diagrams");
    dist->add_option("a", dist_a, "first run directory / embeddings.tsv / diagram .tsv")->required();
    dist->add_option("b", dist_b, "second run directory / embeddings.tsv / diagram .tsv")->required();
    dist->add_option("--kind", dist_kind, "clouds or diagrams")->check(CLI::IsMember({"clouds", "diagrams"}));
    dist->add_option("--n-sub", n_sub, "cloud subsample size")->check(CLI::PositiveNumber);
    dist->add_option("--seed", dist_seed, "subsampling seed");
    dist->add_option("--aggregate", dist_aggregate, "patient embedding aggregation: mean or max");
    dist->add_option("--output,-o", dist_out, "write the table here instead of stdout");

    // synth
    std::string synth_out;
    int synth_patients = 20, synth_per = 2, synth_size = 64;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "write a labelled synthetic corpus");
    synth->add_option("--output,-o", synth_out, "directory")->required();
    synth->add_option("--patients", synth_patients, "patients")->check(CLI::PositiveNumber);
    synth->add_option("--images-per-patient", synth_per, "images per patient")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_size, "image height")->check(CLI::Range(8, 4096));
    synth->add_option("--seed", synth_seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*extract) {
            wph::RunConfig cfg = extract_flags.resolve();
            cfg.input = extract_in;
            cfg.output = extract_out;
            cfg.concat = cfg.concat || extract_concat;
            cfg.dump_pyramid = cfg.dump_pyramid || extract_pyramid;
            const auto summary = wph::run_extract(cfg, std::cerr);
            std::cout << "extracted " << summary.succeeded << " of " << summary.images.size() << " images";
            if (summary.failed) std::cout << " (" << summary.failed << " failed)";
            std::cout << "\n";
            return summary.exit_code();
        }
        if (*ablate) {
            const wph::RunConfig cfg = ablate_flags.resolve();
            wph::AblationGrid grid;
            grid.families = parse_list(families, &wph::parse_wavelet_family);
            grid.depths = parse_list(depths, &parse_int);
            grid.retentions = parse_list(retentions, &parse_double);
            grid.mode = wph::parse_grid_mode(grid_mode);
            const auto corpus = ablate_in.empty()
                                    ? wph::labeled_synthetic_corpus(patients, per_patient, size, cfg.seed)
                                    : wph::load_labeled_corpus(ablate_in);
            wph::EvaluationOptions opt;
            opt.train_fraction = train_fraction;
            opt.n_boot = n_boot;
            opt.seed = cfg.seed;
            const auto rows = wph::run_ablation(corpus, cfg, grid, opt);
            const std::string table = wph::ablation_table(rows);
            fs::create_directories(ablate_out);
            write_text(fs::path(ablate_out) / "config.txt", wph::canonical_config(cfg));
            write_text(fs::path(ablate_out) / "ablation.tsv", table);
            std::cout << table;
            return wph::kExitOk;
        }
        if (*verify) {
            wph::verify::SuiteOptions opt;
            opt.trials = trials;
            opt.seed = verify_seed;
            opt.epsilon = verify_eps;
            opt.family = wph::parse_wavelet_family(verify_family);
            opt.depth = verify_depth;
            opt.side = verify_side;
            wph::validate_wavelet_geometry(opt.side, opt.family, opt.depth);
            std::string report = "check\ttrials\tmax_ratio\tviolations\tseconds\tstatus\n";
            bool ok = true;
            for (const auto& r : wph::verify::run_suite(opt)) {
                char buf[256];
                std::snprintf(buf, sizeof buf, "%s\t%zu\t%.9g\t%zu\t%.2f\t%s\n", r.name.c_str(), r.trials, r.max_ratio,
                              r.violations, r.seconds, r.passed() ? "PASS" : "FAIL");
                report += buf;
                ok = ok && r.passed();
            }
            std::cout << report;
            if (!verify_out.empty()) write_text(verify_out, report);
            return ok ? wph::kExitOk : wph::kExitViolation;
        }
        if (*probe) {
            const auto images = wph::entries_of(wph::read_embeddings(probe_in));
            const auto patients_cloud = wph::aggregate_patient(images, wph::parse_aggregate_mode(probe_aggregate));
            wph::EvaluationOptions opt;
            opt.train_fraction = probe_fraction;
            opt.n_boot = probe_boot;
            opt.seed = probe_seed;
            const auto ev = wph::evaluate_probe(patients_cloud, opt);
            fs::create_directories(probe_out);
            write_text(fs::path(probe_out) / "probe_model.txt", wph::serialize_probe(ev.model));
            const std::string report = wph::probe_report(ev);
            write_text(fs::path(probe_out) / "probe_report.tsv", report);
            std::cout << report;
            return wph::kExitOk;
        }
        if (*dist) {
            std::vector<wph::DistanceRow> rows;
            if (dist_kind == "clouds") {
                rows.push_back(wph::cloud_distance(dist_a, dist_b, wph::parse_aggregate_mode(dist_aggregate), n_sub, dist_seed));
            } else {
                rows = wph::diagram_distances(wph::read_diagram_file(dist_a), wph::read_diagram_file(dist_b));
            }
            const std::string table = wph::distance_table(rows);
            if (dist_out.empty()) {
                std::cout << table;
            } else {
                write_text(dist_out, table);
            }
            return wph::kExitOk;
        }
        if (*synth) {
            const auto n = wph::write_synthetic_corpus(synth_out, synth_patients, synth_per, synth_size, synth_seed);
            std::cout << "wrote " << n << " images to " << synth_out << "\n";
            return wph::kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return wph::kExitError;
    }
    return wph::kExitOk;
}
