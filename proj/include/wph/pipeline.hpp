#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "wph/analysis.hpp"
#include "wph/config.hpp"
#include "wph/diagram_io.hpp"
#include "wph/hash.hpp"
#include "wph/image_io.hpp"
#include "wph/metrics.hpp"
#include "wph/synthetic.hpp"
#include "wph/vectorizer.hpp"

namespace wph {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitPartial = 2, kExitViolation = 3 };

// ---------------------------------------------------------------------------
// In-process extraction (the surface used by language bindings)

struct FloatTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;
};

inline FloatTensor to_float_tensor(const ChannelTensor& t) {
    return {t.channels, t.height, t.width, to_float32(t.data)};
}

/// Channels for an H x W row-major image with values in [0, 1]. The input is
/// min-max normalized exactly as files are after decoding, so a WPH0 image
/// file holding the same floats yields the same bytes via `run_extract`.
inline FloatTensor extract_channels(std::span<const float> image, int height, int width, const ChannelParams& params,
                                    bool concat = false) {
    if (height < 2 || width < 2) throw InputError("image must be at least 2x2");
    if (image.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw StructuralError("image buffer has " + std::to_string(image.size()) + " values, expected " +
                              std::to_string(height) + "x" + std::to_string(width));
    }
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = image[i];
        if (!std::isfinite(v)) throw InputError("image contains a non-finite value at index " + std::to_string(i));
        if (v < 0.0f || v > 1.0f) throw InputError("image value outside [0, 1] at index " + std::to_string(i));
    }
    params.validate();
    GrayImage raw(height, width);
    std::copy(image.begin(), image.end(), raw.values().begin());
    const GrayImage img = min_max_normalize(raw);
    const ChannelStack stack = build_channel_stack(img, params);
    return to_float_tensor(concat ? concat_input(img, stack) : stack_tensor(stack));
}

inline Embedding pool_embedding(const FloatTensor& t) {
    return pool_embedding(std::span<const float>(t.data), t.channels, t.height, t.width);
}

// ---------------------------------------------------------------------------
// Corpus listing and labels

struct LabelInfo {
    std::string patient_id;
    std::optional<int> label;
};

/// Patient id for files without a labels entry: the name up to the first '_'.
inline std::string default_patient_id(const std::string& filename) {
    const std::string stem = std::filesystem::path(filename).stem().string();
    const auto cut = stem.find('_');
    return cut == std::string::npos ? stem : stem.substr(0, cut);
}

inline constexpr const char* kLabelsFile = "labels.tsv";

/// Optional `labels.tsv` in the input directory: `file<TAB>patient_id<TAB>label`
/// with label 0, 1 or NA. Lines starting with '#' and a `file` header are ignored.
inline std::map<std::string, LabelInfo> read_labels(const std::filesystem::path& dir) {
    std::map<std::string, LabelInfo> out;
    const auto path = dir / kLabelsFile;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || line.rfind("file\t", 0) == 0) continue;
        std::istringstream fields(line);
        std::string file, pid, label;
        if (!std::getline(fields, file, '\t') || !std::getline(fields, pid, '\t') || !std::getline(fields, label, '\t')) {
            throw InputError("labels.tsv line " + std::to_string(line_no) + ": expected file, patient_id, label");
        }
        LabelInfo info{pid, std::nullopt};
        if (label == "0" || label == "1") {
            info.label = label == "1";
        } else if (label != "NA") {
            throw InputError("labels.tsv line " + std::to_string(line_no) + ": label must be 0, 1 or NA");
        }
        out[file] = info;
    }
    return out;
}

/// Supported image files directly inside `dir`, sorted by name.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError("input directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no supported images (.png, .pgm, .wph) in " + dir.string());
    return files;
}

inline LabelInfo label_for(const std::map<std::string, LabelInfo>& labels, const std::string& file) {
    if (auto it = labels.find(file); it != labels.end()) return it->second;
    return {default_patient_id(file), std::nullopt};
}

namespace detail {

/// Runs body(i) for i in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& body) {
    const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline std::string label_text(const std::optional<int>& label) { return label ? std::to_string(*label) : "NA"; }

inline nlohmann::ordered_json embedding_json(const Embedding& z) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (double v : z) j.push_back(v);
    return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// extract

struct ImageOutcome {
    std::string file;
    LabelInfo info;
    bool ok = false;
    std::string error;
    int height = 0;
    int width = 0;
    std::string source_sha256;
    std::string stack_sha256;
    std::size_t h0 = 0;
    std::size_t h1 = 0;
    Embedding z{};
};

struct ExtractSummary {
    std::vector<ImageOutcome> images;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::string config_hash;

    int exit_code() const { return failed == 0 ? kExitOk : kExitPartial; }
};

namespace detail {

inline void write_pyramid(const std::filesystem::path& dir, const SubbandPyramid& pyr) {
    std::filesystem::create_directories(dir);
    for (int level = 1; level <= pyr.depth; ++level) {
        for (Band b : {Band::lh, Band::hl, Band::hh}) {
            write_raw_grid(dir / (std::to_string(level) + "_" + to_string(b) + ".wph"), pyr.band(b, level));
        }
    }
    write_raw_grid(dir / (std::to_string(pyr.depth) + "_" + to_string(Band::ll) + ".wph"), pyr.ll);
}

inline ImageOutcome extract_one(const std::filesystem::path& path, const LabelInfo& info, const RunConfig& cfg,
                                const std::string& cfg_hash) {
    namespace fs = std::filesystem;
    ImageOutcome r;
    r.file = path.filename().string();
    r.info = info;
    try {
        const auto bytes = read_file_bytes(path);
        r.source_sha256 = sha256_hex(std::span<const std::uint8_t>(bytes));
        const GrayImage img = min_max_normalize(decode_image(bytes));
        const PreparedImage prep = prepare_image(img, cfg.channels);
        const ChannelStack stack = build_channel_stack(prep, cfg.channels);
        const FloatTensor tensor = to_float_tensor(stack_tensor(stack));
        r.height = stack.height;
        r.width = stack.width;
        r.z = pool_embedding(tensor);
        r.h0 = prep.diagram.count(0);
        r.h1 = prep.diagram.count(1);

        const fs::path out = cfg.output;
        const auto stack_bytes = encode_raw(tensor.data, tensor.height, tensor.width, tensor.channels);
        r.stack_sha256 = sha256_hex(std::span<const std::uint8_t>(stack_bytes));
        write_file_bytes(out / "stacks" / (r.file + ".wph"), stack_bytes);

        nlohmann::ordered_json meta;
        meta["source_file"] = r.file;
        meta["source_sha256"] = r.source_sha256;
        meta["config_sha256"] = cfg_hash;
        meta["height"] = stack.height;
        meta["width"] = stack.width;
        meta["channels"] = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < stack.channels.size(); ++k) {
            meta["channels"].push_back(
                {{"index", k}, {"name", stack.names[k]}, {"raw_min", stack.rescale[k].first}, {"raw_max", stack.rescale[k].second}});
        }
        meta["embedding"] = embedding_json(r.z);
        meta["stack_sha256"] = r.stack_sha256;
        write_text(out / "stacks" / (r.file + ".json"), meta.dump(2) + "\n");

        if (cfg.concat) {
            const FloatTensor cat = to_float_tensor(concat_input(img, stack));
            write_file_bytes(out / "concat" / (r.file + ".wph"), encode_raw(cat.data, cat.height, cat.width, cat.channels));
        }

        DiagramProvenance prov;
        prov.source_file = r.file;
        prov.source_sha256 = r.source_sha256;
        prov.persistence_height = prep.persistence_grid.height();
        prov.persistence_width = prep.persistence_grid.width();
        prov.max_side = cfg.channels.max_side;
        prov.mask_applied = prep.mask_applied;
        prov.h1_pct = cfg.channels.gating.h1_pct;
        prov.h1_order = to_string(cfg.channels.gating.h1_order);
        write_text(out / "diagrams" / (r.file + ".tsv"), serialize_diagram(prep.diagram));
        write_text(out / "diagrams" / (r.file + ".json"), diagram_sidecar(prep.diagram, prov).dump(2) + "\n");

        if (cfg.dump_pyramid) {
            write_pyramid(out / "pyramid" / r.file,
                          dwt2(prep.wavelet_input.square, cfg.channels.gating.family, cfg.channels.gating.depth));
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    return r;
}

}  // namespace detail

inline std::string embeddings_header() {
    std::string h = "file\tpatient_id\tlabel";
    for (std::size_t k = 0; k < kChannelCount; ++k) h += "\tz" + std::to_string(k);
    return h + "\n";
}

/// Extracts every image in cfg.input into cfg.output. Per-image failures are
/// logged and recorded in the manifest; the remaining outputs are unaffected.
inline ExtractSummary run_extract(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    cfg.validate();
    if (cfg.output.empty()) throw ConfigError("output directory is required");
    const auto files = list_images(cfg.input);
    const auto labels = read_labels(cfg.input);
    for (const char* sub : {"stacks", "diagrams"}) fs::create_directories(cfg.output / sub);
    if (cfg.concat) fs::create_directories(cfg.output / "concat");

    ExtractSummary summary;
    summary.config_hash = config_hash(cfg);
    detail::write_text(cfg.output / "config.txt", canonical_config(cfg));

    summary.images.resize(files.size());
    detail::parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        summary.images[i] =
            detail::extract_one(files[i], label_for(labels, files[i].filename().string()), cfg, summary.config_hash);
    });

    nlohmann::ordered_json manifest;
    manifest["config_sha256"] = summary.config_hash;
    manifest["channel_names"] = channel_names(cfg.channels.gating.depth);
    manifest["images"] = nlohmann::ordered_json::array();
    manifest["failures"] = nlohmann::ordered_json::array();
    std::string embeddings = embeddings_header();
    std::vector<EmbeddingEntry> entries;
    for (const auto& r : summary.images) {
        if (!r.ok) {
            ++summary.failed;
            log << "error: " << r.file << ": " << r.error << "\n";
            manifest["failures"].push_back({{"file", r.file}, {"error", r.error}});
            continue;
        }
        ++summary.succeeded;
        nlohmann::ordered_json e;
        e["file"] = r.file;
        e["patient_id"] = r.info.patient_id;
        e["label"] = r.info.label ? nlohmann::ordered_json(*r.info.label) : nlohmann::ordered_json(nullptr);
        e["source_sha256"] = r.source_sha256;
        e["height"] = r.height;
        e["width"] = r.width;
        e["stack"] = "stacks/" + r.file + ".wph";
        e["stack_sha256"] = r.stack_sha256;
        e["diagram"] = "diagrams/" + r.file + ".tsv";
        e["diagram_counts"] = {{"h0", r.h0}, {"h1", r.h1}};
        e["embedding"] = detail::embedding_json(r.z);
        manifest["images"].push_back(e);

        embeddings += r.file + "\t" + r.info.patient_id + "\t" + detail::label_text(r.info.label);
        for (double v : r.z) embeddings += "\t" + format_real(v);
        embeddings += "\n";
        entries.push_back({r.info.patient_id, r.z, r.info.label});
    }
    manifest["counts"] = {{"images", files.size()}, {"succeeded", summary.succeeded}, {"failed", summary.failed}};
    detail::write_text(cfg.output / "manifest.json", manifest.dump(2) + "\n");
    detail::write_text(cfg.output / "embeddings.tsv", embeddings);

    AggregateReport report;
    const EmbeddingCloud patients = aggregate_patient(entries, cfg.embedding_aggregate, &report);
    std::string patient_rows = "patient_id\tlabel";
    for (std::size_t k = 0; k < kChannelCount; ++k) patient_rows += "\tz" + std::to_string(k);
    patient_rows += "\n";
    for (const auto& p : patients.entries) {
        patient_rows += p.patient_id + "\t" + detail::label_text(p.label);
        for (double v : p.z) patient_rows += "\t" + format_real(v);
        patient_rows += "\n";
    }
    detail::write_text(cfg.output / "patients.tsv", patient_rows);
    if (report.skipped) log << "warning: " << report.skipped << " images without a patient id were skipped\n";
    return summary;
}

// ---------------------------------------------------------------------------
// Embedding tables

struct ImageEmbedding {
    std::string file;
    EmbeddingEntry entry;
};

/// Reads embeddings.tsv (or the one inside a run directory).
inline std::vector<ImageEmbedding> read_embeddings(const std::filesystem::path& where) {
    const auto path = std::filesystem::is_directory(where) ? where / "embeddings.tsv" : where;
    std::ifstream in(path);
    if (!in) throw InputError("cannot read embeddings table " + path.string());
    std::vector<ImageEmbedding> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.rfind("file\t", 0) == 0) continue;
        std::istringstream fields(line);
        ImageEmbedding e;
        std::string label;
        std::getline(fields, e.file, '\t');
        std::getline(fields, e.entry.patient_id, '\t');
        std::getline(fields, label, '\t');
        if (label == "0" || label == "1") {
            e.entry.label = label == "1";
        } else if (label != "NA") {
            throw InputError(path.string() + " line " + std::to_string(line_no) + ": bad label '" + label + "'");
        }
        for (auto& v : e.entry.z) {
            std::string cell;
            if (!std::getline(fields, cell, '\t')) throw InputError(path.string() + " line " + std::to_string(line_no) + ": expected 8 components");
            v = detail::parse_number<double>("embedding", cell);
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) throw InputError("embeddings table " + path.string() + " is empty");
    return out;
}

inline std::vector<EmbeddingEntry> entries_of(const std::vector<ImageEmbedding>& rows) {
    std::vector<EmbeddingEntry> out;
    for (const auto& r : rows) out.push_back(r.entry);
    return out;
}

// ---------------------------------------------------------------------------
// Probe evaluation

struct ProbeEvaluation {
    ProbeModel model;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double train_loss_initial = 0.0;
    double train_loss = 0.0;
    double auc = 0.0;
    BootstrapResult ci;
    YoudenResult youden;   // threshold chosen on training scores
    OperatingPoint test_point;
};

struct EvaluationOptions {
    double train_fraction = 0.6;
    int n_boot = 1000;
    std::uint64_t seed = 0;
    ProbeOptions probe;
};

/// Patient-level protocol: stratified split, probe fit on train, AUC with
/// bootstrap CI on test, Youden threshold from train applied to test.
inline ProbeEvaluation evaluate_probe(const EmbeddingCloud& patients, const EvaluationOptions& opt) {
    const std::vector<int> y = patients.labels();
    const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (positives < 2 || y.size() - positives < 2) {
        throw InputError("probe evaluation needs at least two patients of each class");
    }
    const Split split = stratified_split(y, opt.train_fraction, opt.seed);
    std::vector<Embedding> z_train, z_test;
    std::vector<int> y_train, y_test;
    for (auto i : split.train) {
        z_train.push_back(patients.entries[i].z);
        y_train.push_back(y[i]);
    }
    for (auto i : split.test) {
        z_test.push_back(patients.entries[i].z);
        y_test.push_back(y[i]);
    }
    ProbeEvaluation ev;
    ev.n_train = z_train.size();
    ev.n_test = z_test.size();
    ev.model = fit_probe(z_train, y_train, opt.probe);
    ProbeModel zero;
    zero.lambda = opt.probe.lambda;
    ev.train_loss_initial = probe_loss(zero, z_train, y_train);
    ev.train_loss = probe_loss(ev.model, z_train, y_train);

    std::vector<double> s_train, s_test;
    for (const auto& z : z_train) s_train.push_back(ev.model.predict(z));
    for (const auto& z : z_test) s_test.push_back(ev.model.predict(z));
    ev.auc = roc_auc(s_test, y_test);
    ev.ci = bootstrap_ci(s_test, y_test, [](auto s, auto l) { return roc_auc(s, l); }, opt.n_boot, opt.seed);
    ev.youden = youden_threshold(s_train, y_train);
    ev.test_point = operating_point(s_test, y_test, ev.youden.threshold);
    return ev;
}

/// Ten lines: w0..w7, b, lambda.
inline std::string serialize_probe(const ProbeModel& m) {
    std::string out;
    for (double w : m.w) out += format_real(w) + "\n";
    out += format_real(m.b) + "\n" + format_real(m.lambda) + "\n";
    return out;
}

inline ProbeModel parse_probe(const std::string& text) {
    std::istringstream in(text);
    ProbeModel m;
    std::vector<double> v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) v.push_back(detail::parse_number<double>("probe model", line));
    }
    if (v.size() != kChannelCount + 2) throw InputError("probe model must have 10 lines");
    std::copy(v.begin(), v.begin() + kChannelCount, m.w.begin());
    m.b = v[kChannelCount];
    m.lambda = v[kChannelCount + 1];
    return m;
}

inline std::string probe_report(const ProbeEvaluation& ev) {
    std::ostringstream out;
    auto row = [&](const std::string& k, const std::string& v) { out << k << '\t' << v << '\n'; };
    row("n_train", std::to_string(ev.n_train));
    row("n_test", std::to_string(ev.n_test));
    row("train_loss_initial", format_real(ev.train_loss_initial));
    row("train_loss", format_real(ev.train_loss));
    row("auc", format_real(ev.auc));
    row("auc_ci_low", format_real(ev.ci.low));
    row("auc_ci_high", format_real(ev.ci.high));
    row("auc_boot_mean", format_real(ev.ci.mean));
    row("boot_valid", std::to_string(ev.ci.valid));
    row("boot_skipped", std::to_string(ev.ci.skipped));
    row("youden_threshold", format_real(ev.youden.threshold));
    row("youden_index_train", format_real(ev.youden.index));
    row("test_sensitivity", format_real(ev.test_point.sensitivity));
    row("test_specificity", format_real(ev.test_point.specificity));
    row("test_accuracy", format_real(ev.test_point.accuracy));
    return out.str();
}

// ---------------------------------------------------------------------------
// Ablation

struct LabeledImage {
    std::string name;
    std::string patient_id;
    int label = 0;
    GrayImage image;  // normalized
};

/// Every image in `dir` must have a 0/1 label in labels.tsv.
inline std::vector<LabeledImage> load_labeled_corpus(const std::filesystem::path& dir) {
    const auto files = list_images(dir);
    const auto labels = read_labels(dir);
    std::vector<LabeledImage> out;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        const LabelInfo info = label_for(labels, name);
        if (!info.label) throw InputError("image " + name + " has no label in labels.tsv");
        out.push_back({name, info.patient_id, *info.label, min_max_normalize(load_image(f))});
    }
    return out;
}

inline std::vector<LabeledImage> labeled_synthetic_corpus(int patients, int images_per_patient, int size,
                                                          std::uint64_t seed) {
    std::vector<LabeledImage> out;
    for (auto& s : synthetic_corpus(patients, images_per_patient, size, seed)) {
        out.push_back({s.name, s.patient_id, s.label, min_max_normalize(s.image)});
    }
    return out;
}

enum class GridMode { full, marginal };

inline GridMode parse_grid_mode(const std::string& s) {
    if (s == "full") return GridMode::full;
    if (s == "marginal") return GridMode::marginal;
    throw ConfigError("unknown grid mode '" + s + "' (expected full or marginal)");
}

struct AblationGrid {
    std::vector<WaveletFamily> families = {WaveletFamily::haar, WaveletFamily::db2, WaveletFamily::db4};
    std::vector<int> depths = {1, 2, 3};
    std::vector<double> retentions = {0.1, 0.25, 0.5};
    GridMode mode = GridMode::full;
};

struct AblationCell {
    std::string varied;  // "all" for full grids, else the factor varied
    WaveletFamily family = WaveletFamily::haar;
    int depth = 2;
    double h1_pct = 0.5;
};

/// Full grids are the Cartesian product. Marginal grids vary one factor at a
/// time with the others held at `baseline`.
inline std::vector<AblationCell> ablation_cells(const AblationGrid& grid, const GatingParams& baseline) {
    std::vector<AblationCell> cells;
    if (grid.mode == GridMode::full) {
        for (auto f : grid.families)
            for (int d : grid.depths)
                for (double h : grid.retentions) cells.push_back({"all", f, d, h});
        return cells;
    }
    for (auto f : grid.families) cells.push_back({"family", f, baseline.depth, baseline.h1_pct});
    for (int d : grid.depths) cells.push_back({"depth", baseline.family, d, baseline.h1_pct});
    for (double h : grid.retentions) cells.push_back({"h1_pct", baseline.family, baseline.depth, h});
    return cells;
}

struct AblationRow {
    AblationCell cell;
    ProbeEvaluation eval;
};

inline std::vector<AblationRow> run_ablation(const std::vector<LabeledImage>& corpus, const RunConfig& cfg,
                                             const AblationGrid& grid, const EvaluationOptions& opt) {
    cfg.validate();
    if (corpus.empty()) throw InputError("ablation corpus is empty");
    // Diagrams and resampled grids do not depend on the gated factors.
    std::vector<PreparedImage> prepared(corpus.size());
    detail::parallel_for(corpus.size(), cfg.workers,
                         [&](std::size_t i) { prepared[i] = prepare_image(corpus[i].image, cfg.channels); });

    std::vector<AblationRow> rows;
    for (const AblationCell& cell : ablation_cells(grid, cfg.channels.gating)) {
        ChannelParams params = cfg.channels;
        params.gating.family = cell.family;
        params.gating.depth = cell.depth;
        params.gating.h1_pct = cell.h1_pct;
        params.validate();
        std::vector<EmbeddingEntry> entries(corpus.size());
        detail::parallel_for(corpus.size(), cfg.workers, [&](std::size_t i) {
            entries[i] = {corpus[i].patient_id, pool_embedding(build_channel_stack(prepared[i], params)), corpus[i].label};
        });
        const EmbeddingCloud patients = aggregate_patient(entries, cfg.embedding_aggregate);
        rows.push_back({cell, evaluate_probe(patients, opt)});
    }
    return rows;
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    out << "varied\tfamily\tdepth\th1_pct\tauc\tci_low\tci_high\tn_train\tn_test\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s\t%s\t%d\t%.2f\t%.4f\t%.4f\t%.4f\t%zu\t%zu\n", r.cell.varied.c_str(),
                      to_string(r.cell.family).c_str(), r.cell.depth, r.cell.h1_pct, r.eval.auc, r.eval.ci.low,
                      r.eval.ci.high, r.eval.n_train, r.eval.n_test);
        out << buf;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Distances

struct DistanceRow {
    std::string metric;
    std::string p;
    std::string dim;
    double value = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::string seed;
};

inline std::string distance_table(const std::vector<DistanceRow>& rows) {
    std::string out = "metric\tp\tdim\tvalue\tn1\tn2\tseed\n";
    for (const auto& r : rows) {
        out += r.metric + "\t" + r.p + "\t" + r.dim + "\t" + format_real(r.value) + "\t" + std::to_string(r.n1) + "\t" +
               std::to_string(r.n2) + "\t" + r.seed + "\n";
    }
    return out;
}

/// W2 between the patient-level embedding clouds of two runs.
inline DistanceRow cloud_distance(const std::filesystem::path& a, const std::filesystem::path& b, AggregateMode mode,
                                  std::size_t n_sub, std::uint64_t seed) {
    const auto ea = entries_of(read_embeddings(a));
    const auto eb = entries_of(read_embeddings(b));
    const auto pa = aggregate_patient(ea, mode).points();
    const auto pb = aggregate_patient(eb, mode).points();
    const CloudDistance d = wasserstein2_clouds(pa, pb, n_sub, seed);
    return {"w2", "2", "-", d.value, d.size_a, d.size_b, std::to_string(seed)};
}

inline PersistenceDiagram read_diagram_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_diagram(std::string(bytes.begin(), bytes.end()));
}

/// Bottleneck and W1 (p = 1, 2, inf) per homology dimension.
inline std::vector<DistanceRow> diagram_distances(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    std::vector<DistanceRow> rows;
    for (int dim : {0, 1}) {
        const auto da = a.in_dim(dim), db = b.in_dim(dim);
        const std::string d = std::to_string(dim);
        rows.push_back({"bottleneck", "inf", d, bottleneck(da, db), da.size(), db.size(), "-"});
        for (GroundNorm p : {GroundNorm::l1, GroundNorm::l2, GroundNorm::linf}) {
            rows.push_back({"w1", to_string(p), d, wasserstein1(da, db, p).cost, da.size(), db.size(), "-"});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Synthetic corpus on disk

/// Writes 16-bit PNGs plus labels.tsv; returns the number of images.
inline std::size_t write_synthetic_corpus(const std::filesystem::path& dir, int patients, int images_per_patient,
                                          int size, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::string labels = "file\tpatient_id\tlabel\n";
    const auto corpus = synthetic_corpus(patients, images_per_patient, size, seed);
    for (const auto& s : corpus) {
        const std::string file = s.name + ".png";
        write_file_bytes(dir / file, encode_png(s.image, 16));
        labels += file + "\t" + s.patient_id + "\t" + std::to_string(s.label) + "\n";
    }
    detail::write_text(dir / kLabelsFile, labels);
    return corpus.size();
}

}  // namespace wph
