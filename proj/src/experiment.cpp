#include "ndl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ndl {

namespace {

using nlohmann::json;

constexpr const char* kMetricsSchema = "ndl-metrics-v1";
constexpr const char* kStateSchema = "ndl-state-v1";

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// ---- config parsing -------------------------------------------------------

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

std::vector<size_t> parse_budget(const json& j, size_t levels) {
    // accepts a single integer (uniform budget) or one entry per level
    if (j.is_number_unsigned() || j.is_number_integer()) {
        return std::vector<size_t>(levels, j.get<size_t>());
    }
    auto v = j.get<std::vector<size_t>>();
    if (v.size() == 1) return std::vector<size_t>(levels, v[0]);
    return v;
}

}  // namespace

uint64_t derive_round_seed(uint64_t seed, uint64_t round) {
    return splitmix64(seed ^ splitmix64(round + 1));
}

Condition parse_condition(const std::string& name) {
    if (name == "CL") return Condition::cl;
    if (name == "NDL") return Condition::ndl;
    if (name == "CL+IR") return Condition::cl_ir;
    if (name == "NDL+IR") return Condition::ndl_ir;
    throw ConfigError("unknown condition '" + name + "' (want CL, NDL, CL+IR or NDL+IR)");
}

std::string condition_name(Condition c) {
    switch (c) {
        case Condition::cl: return "CL";
        case Condition::ndl: return "NDL";
        case Condition::cl_ir: return "CL+IR";
        case Condition::ndl_ir: return "NDL+IR";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (architecture.size() < 2) {
        throw ConfigError("architecture needs the input width plus at least one level");
    }
    for (size_t w : architecture) {
        if (w == 0) throw ConfigError("architecture widths must be positive");
    }
    if (initial_classes.empty()) throw ConfigError("initial_classes must not be empty");
    std::set<int> seen(initial_classes.begin(), initial_classes.end());
    if (seen.size() != initial_classes.size()) {
        throw ConfigError("initial_classes contains duplicates");
    }
    for (int c : presentation_order) {
        if (!seen.insert(c).second) {
            throw ConfigError("class " + std::to_string(c) +
                              " appears twice across initial_classes/presentation_order");
        }
    }
    if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (train.minibatch_size < 1) throw ConfigError("train.minibatch must be >= 1");
    if (train.noise_fraction < 0.0 || train.noise_fraction > 1.0) {
        throw ConfigError("train.noise_fraction outside [0,1]");
    }
    if (dataset.heldout_fraction < 0.0 || dataset.heldout_fraction > 0.5) {
        throw ConfigError("dataset.heldout_fraction outside [0, 0.5]");
    }
    const size_t levels = architecture.size() - 1;
    if (condition == Condition::ndl || condition == Condition::ndl_ir) {
        if (ndl.max_nodes.size() != levels) {
            throw ConfigError("neurogenesis.max_nodes must list one budget per level");
        }
        if (!ndl.thresholds.empty() && ndl.thresholds.size() != levels) {
            throw ConfigError("neurogenesis.thresholds must be empty or one per level");
        }
        if (!(threshold_percentile > 0.0 && threshold_percentile <= 100.0)) {
            throw ConfigError("threshold_percentile outside (0, 100]");
        }
    }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            cfg.dataset.images_path = get_or<std::string>(d, "images", "");
            cfg.dataset.labels_path = get_or<std::string>(d, "labels", "");
            cfg.dataset.max_train_per_class = get_or<size_t>(d, "max_train_per_class", 0);
            cfg.dataset.heldout_fraction = get_or<double>(d, "heldout_fraction", 0.1);
        }
        cfg.initial_classes = get_or<std::vector<int>>(j, "initial_classes", {});
        cfg.presentation_order = get_or<std::vector<int>>(j, "presentation_order", {});
        cfg.condition = parse_condition(get_or<std::string>(j, "condition", "NDL+IR"));
        cfg.architecture = get_or<std::vector<size_t>>(j, "architecture", {});
        if (j.contains("train")) {
            const json& t = j.at("train");
            cfg.train.learning_rate = get_or<double>(t, "learning_rate", 0.1);
            cfg.train.epochs = get_or<size_t>(t, "epochs", 15);
            cfg.train.minibatch_size = get_or<size_t>(t, "minibatch", 20);
            cfg.train.noise_fraction = get_or<double>(t, "noise_fraction", 0.1);
        }
        const size_t levels = cfg.architecture.empty() ? 0 : cfg.architecture.size() - 1;
        if (j.contains("neurogenesis")) {
            const json& n = j.at("neurogenesis");
            if (n.contains("thresholds")) cfg.ndl.thresholds = n.at("thresholds").get<Vec>();
            if (n.contains("max_nodes")) cfg.ndl.max_nodes = parse_budget(n.at("max_nodes"), levels);
            cfg.ndl.max_outliers = get_or<size_t>(n, "max_outliers", 0);
            cfg.ndl.max_outlier_fraction = get_or<double>(n, "max_outlier_fraction", -1.0);
            cfg.ndl.nodes_per_step = get_or<size_t>(n, "nodes_per_step", 5);
            cfg.ndl.plasticity_epochs = get_or<size_t>(n, "plasticity_epochs", 10);
            cfg.ndl.stability_epochs = get_or<size_t>(n, "stability_epochs", 5);
            cfg.ndl.decoder_lr_divisor = get_or<double>(n, "decoder_lr_divisor", 100.0);
            cfg.threshold_percentile = get_or<double>(n, "threshold_percentile", 95.0);
        }
        if (j.contains("replay")) {
            const json& r = j.at("replay");
            cfg.ndl.replay_per_class = get_or<size_t>(r, "per_class", 1000);
            cfg.ndl.replay_ridge = get_or<double>(r, "ridge", 0.0);
        }
        cfg.ndl.minibatch_size = cfg.train.minibatch_size;
        cfg.ndl.noise_fraction = cfg.train.noise_fraction;
        // the growth phases may run at their own rate; default to the train rate
        cfg.ndl.learning_rate = cfg.train.learning_rate;
        if (j.contains("neurogenesis") && j.at("neurogenesis").contains("learning_rate")) {
            cfg.ndl.learning_rate = j.at("neurogenesis").at("learning_rate").get<double>();
        }
        cfg.growth_report_path = get_or<std::string>(j, "growth_report", "");
        cfg.seed = get_or<uint64_t>(j, "seed", 1234);
        cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["dataset"] = {{"images", dataset.images_path},
                    {"labels", dataset.labels_path},
                    {"max_train_per_class", dataset.max_train_per_class},
                    {"heldout_fraction", dataset.heldout_fraction}};
    j["initial_classes"] = initial_classes;
    j["presentation_order"] = presentation_order;
    j["condition"] = condition_name(condition);
    j["architecture"] = architecture;
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"epochs", train.epochs},
                  {"minibatch", train.minibatch_size},
                  {"noise_fraction", train.noise_fraction}};
    j["neurogenesis"] = {{"learning_rate", ndl.learning_rate},
                         {"thresholds", ndl.thresholds},
                         {"max_nodes", ndl.max_nodes},
                         {"max_outliers", ndl.max_outliers},
                         {"max_outlier_fraction", ndl.max_outlier_fraction},
                         {"nodes_per_step", ndl.nodes_per_step},
                         {"plasticity_epochs", ndl.plasticity_epochs},
                         {"stability_epochs", ndl.stability_epochs},
                         {"decoder_lr_divisor", ndl.decoder_lr_divisor},
                         {"threshold_percentile", threshold_percentile}};
    j["replay"] = {{"per_class", ndl.replay_per_class}, {"ridge", ndl.replay_ridge}};
    j["growth_report"] = growth_report_path;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    return j.dump(2) + "\n";
}

// ---- dataset split --------------------------------------------------------

namespace {

struct SplitData {
    std::map<int, Matrix> train;
    std::map<int, Matrix> heldout;
    std::vector<int> protocol_classes;  // initial, then presentation order
    size_t input_dim = 0;
};

Matrix take_rows(const Matrix& src, const std::vector<size_t>& rows, size_t begin, size_t end) {
    Matrix out(end - begin, src.cols);
    for (size_t i = begin; i < end; ++i) out.set_row(i - begin, src.row(rows[i]));
    return out;
}

SplitData load_and_split(const ExperimentConfig& cfg) {
    if (cfg.dataset.images_path.empty() || cfg.dataset.labels_path.empty()) {
        throw ConfigError("dataset.images and dataset.labels are required");
    }
    const LabeledDataset ds = load_idx_dataset(cfg.dataset.images_path, cfg.dataset.labels_path);
    if (ds.images.cols != cfg.architecture.front()) {
        throw DataError("dataset pixels per image " + std::to_string(ds.images.cols) +
                        " != architecture input width " +
                        std::to_string(cfg.architecture.front()));
    }

    SplitData split;
    split.input_dim = ds.images.cols;
    split.protocol_classes = cfg.initial_classes;
    split.protocol_classes.insert(split.protocol_classes.end(), cfg.presentation_order.begin(),
                                  cfg.presentation_order.end());

    for (int klass : split.protocol_classes) {
        std::vector<size_t> rows;
        for (size_t r = 0; r < ds.size(); ++r) {
            if (ds.labels[r] == klass) rows.push_back(r);
        }
        if (rows.size() < 2) {
            throw DataError("class " + std::to_string(klass) + " has " +
                            std::to_string(rows.size()) + " samples; need at least 2");
        }
        size_t held = std::max<size_t>(
            1, size_t(std::floor(cfg.dataset.heldout_fraction * double(rows.size()))));
        size_t ntrain = rows.size() - held;
        if (cfg.dataset.max_train_per_class > 0) {
            ntrain = std::min(ntrain, cfg.dataset.max_train_per_class);
        }
        split.train[klass] = take_rows(ds.images, rows, 0, ntrain);
        split.heldout[klass] = take_rows(ds.images, rows, rows.size() - held, rows.size());
    }
    return split;
}

Matrix concat_classes(const SplitData& split, const std::vector<int>& classes) {
    size_t rows = 0;
    size_t cols = split.input_dim;
    for (int c : classes) rows += split.train.at(c).rows;
    Matrix out(rows, cols);
    size_t r = 0;
    for (int c : classes) {
        const Matrix& m = split.train.at(c);
        for (size_t i = 0; i < m.rows; ++i, ++r) out.set_row(r, m.row(i));
    }
    return out;
}

// ---- metrics / growth serialization ---------------------------------------

json record_to_json(const MetricsRecord& rec) {
    json re = json::object();
    for (const auto& [klass, levels] : rec.mean_re) re[std::to_string(klass)] = levels;
    return json{{"round", rec.round},
                {"class_learned", rec.class_learned},
                {"condition", rec.condition},
                {"widths", rec.widths},
                {"mean_re", std::move(re)}};
}

MetricsRecord record_from_json(const json& j) {
    MetricsRecord rec;
    rec.round = j.at("round").get<size_t>();
    rec.class_learned = j.at("class_learned").get<int>();
    rec.condition = j.at("condition").get<std::string>();
    rec.widths = j.at("widths").get<std::vector<size_t>>();
    for (const auto& [key, value] : j.at("mean_re").items()) {
        rec.mean_re[std::stoi(key)] = value.get<Vec>();
    }
    return rec;
}

json level_report_to_json(size_t round, int new_class, const LevelReport& lr) {
    json before = json::object(), after = json::object();
    for (const auto& [k, v] : lr.mean_re_before) before[std::to_string(k)] = v;
    for (const auto& [k, v] : lr.mean_re_after) after[std::to_string(k)] = v;
    return json{{"round", round},
                {"new_class", new_class},
                {"level", lr.level},
                {"nodes_added", lr.nodes_added},
                {"iterations", lr.iterations},
                {"outliers_before", lr.outliers_before},
                {"outliers_after", lr.outliers_after},
                {"width_before", lr.width_before},
                {"width_after", lr.width_after},
                {"mean_re_before", std::move(before)},
                {"mean_re_after", std::move(after)}};
}

// ---- experiment context ---------------------------------------------------

struct Context {
    ExperimentConfig cfg;
    SplitData split;
    StackedAutoencoder model;
    ReplayStore store;
    Vec thresholds;
    size_t next_round = 1;
    std::vector<int> learned;
    std::vector<MetricsRecord> records;
    std::vector<GrowthRound> growth;
    std::filesystem::path out;

    std::filesystem::path metrics_json_path() const { return out / "metrics.json"; }
    std::filesystem::path metrics_csv_path() const { return out / "metrics.csv"; }
    std::filesystem::path growth_path() const { return out / "growth.jsonl"; }
    std::filesystem::path timings_path() const { return out / "timings.csv"; }
    std::filesystem::path checkpoint_path() const { return out / "checkpoint.ndl"; }
    std::filesystem::path state_path() const { return out / "state.json"; }
    std::filesystem::path config_path() const { return out / "config.json"; }
};

MetricsRecord evaluate(const Context& ctx, size_t round, int class_learned) {
    MetricsRecord rec;
    rec.round = round;
    rec.class_learned = class_learned;
    rec.condition = condition_name(ctx.cfg.condition);
    const auto widths = ctx.model.widths();
    rec.widths.assign(widths.begin() + 1, widths.end());
    for (const auto& [klass, data] : ctx.split.heldout) {
        Vec per_level(ctx.model.depth());
        for (size_t level = 1; level <= ctx.model.depth(); ++level) {
            per_level[level - 1] = ctx.model.mean_reconstruction_error(data, level);
        }
        rec.mean_re[klass] = std::move(per_level);
    }
    return rec;
}

void write_outputs(const Context& ctx) {
    std::filesystem::create_directories(ctx.out);

    json mj;
    mj["schema"] = kMetricsSchema;
    mj["records"] = json::array();
    for (const auto& rec : ctx.records) mj["records"].push_back(record_to_json(rec));
    std::ofstream mout(ctx.metrics_json_path(), std::ios::trunc);
    mout << mj.dump(2) << "\n";

    std::ofstream cout_(ctx.metrics_csv_path(), std::ios::trunc);
    cout_ << "round,class,level,mean_re,width\n";
    for (const auto& rec : ctx.records) {
        for (const auto& [klass, levels] : rec.mean_re) {
            for (size_t level = 1; level <= levels.size(); ++level) {
                cout_ << rec.round << "," << klass << "," << level << ","
                      << fmt_double(levels[level - 1]) << "," << rec.widths[level - 1] << "\n";
            }
        }
    }

    std::ofstream gout(ctx.growth_path(), std::ios::trunc);
    for (const auto& gr : ctx.growth) {
        for (const auto& lr : gr.report.levels) {
            gout << level_report_to_json(gr.round, gr.report.new_class, lr).dump() << "\n";
        }
    }

    json sj;
    sj["schema"] = kStateSchema;
    sj["condition"] = condition_name(ctx.cfg.condition);
    sj["seed"] = ctx.cfg.seed;
    sj["next_round"] = ctx.next_round;
    sj["learned"] = ctx.learned;
    sj["thresholds"] = ctx.thresholds;
    std::ofstream sout(ctx.state_path(), std::ios::trunc);
    sout << sj.dump(2) << "\n";

    save_checkpoint(Checkpoint{ctx.model, ctx.store}, ctx.checkpoint_path().string());

    std::ofstream cfgout(ctx.config_path(), std::ios::trunc);
    cfgout << ctx.cfg.to_json_text();
}

void append_timing(const Context& ctx, size_t round, double seconds) {
    const bool fresh = !std::filesystem::exists(ctx.timings_path());
    std::ofstream tout(ctx.timings_path(), std::ios::app);
    if (fresh) tout << "round,seconds\n";
    tout << round << "," << fmt_double(seconds) << "\n";
}

bool uses_replay(Condition c) { return c == Condition::cl_ir || c == Condition::ndl_ir; }
bool uses_growth(Condition c) { return c == Condition::ndl || c == Condition::ndl_ir; }

NeurogenesisConfig ndl_config_for_round(const Context& ctx) {
    NeurogenesisConfig cfg = ctx.cfg.ndl;
    cfg.thresholds = ctx.thresholds;
    return cfg;
}

Context init_pretrain(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();

    Context ctx;
    ctx.out = cfg.output_dir;

    // Fixed-size control conditions can mirror the final grown NDL widths.
    if (!cfg.growth_report_path.empty() && !uses_growth(cfg.condition)) {
        const auto widths =
            final_widths_from_growth(cfg.growth_report_path, cfg.architecture.size() - 1);
        for (size_t l = 0; l < widths.size(); ++l) cfg.architecture[l + 1] = widths[l];
    }
    ctx.cfg = cfg;
    ctx.split = load_and_split(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    RngState rng(derive_round_seed(cfg.seed, 0));
    ctx.model = StackedAutoencoder(cfg.architecture, rng);
    const Matrix initial = concat_classes(ctx.split, cfg.initial_classes);
    pretrain_stack(ctx.model, initial, cfg.train, rng);

    if (uses_growth(cfg.condition)) {
        ctx.thresholds = cfg.ndl.thresholds.empty()
                             ? calibrate_thresholds(ctx.model, initial, cfg.threshold_percentile)
                             : cfg.ndl.thresholds;
    }
    if (uses_replay(cfg.condition)) {
        for (int klass : cfg.initial_classes) {
            ctx.store.insert(fit_class_stats(ctx.model, ctx.split.train.at(klass), klass,
                                             cfg.ndl.replay_ridge));
        }
    }
    ctx.records.push_back(evaluate(ctx, 0, -1));
    ctx.next_round = 1;
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

    write_outputs(ctx);
    append_timing(ctx, 0, dt.count());
    return ctx;
}

void apply_round(Context& ctx, int klass, size_t round) {
    const auto t0 = std::chrono::steady_clock::now();
    RngState rng(derive_round_seed(ctx.cfg.seed, round));
    const Matrix& new_train = ctx.split.train.at(klass);

    switch (ctx.cfg.condition) {
        case Condition::cl: {
            continue_layerwise(ctx.model, new_train, ctx.cfg.train, rng);
            break;
        }
        case Condition::cl_ir: {
            auto snapshots =
                make_replay_snapshots(ctx.store, ctx.model, ctx.cfg.ndl.replay_per_class, rng);
            const Matrix stable = build_stable_train(new_train, snapshots, rng);
            continue_layerwise(ctx.model, stable, ctx.cfg.train, rng);
            snapshots[klass] = new_train;
            ctx.store = refresh_store(ctx.model, snapshots, ctx.cfg.ndl.replay_ridge);
            break;
        }
        case Condition::ndl: {
            NdlResult res = run_ndl(ctx.model, new_train, klass, ReplayStore{},
                                    ndl_config_for_round(ctx), rng);
            ctx.growth.push_back(GrowthRound{round, std::move(res.report)});
            break;  // replay disabled: the refreshed store is discarded
        }
        case Condition::ndl_ir: {
            NdlResult res =
                run_ndl(ctx.model, new_train, klass, ctx.store, ndl_config_for_round(ctx), rng);
            ctx.store = std::move(res.store);
            ctx.growth.push_back(GrowthRound{round, std::move(res.report)});
            break;
        }
    }

    ctx.learned.push_back(klass);
    ctx.next_round = round + 1;
    ctx.records.push_back(evaluate(ctx, round, klass));
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

    write_outputs(ctx);
    append_timing(ctx, round, dt.count());
}

ExperimentResult result_from(const Context& ctx) {
    ExperimentResult res;
    res.records = ctx.records;
    res.growth = ctx.growth;
    const auto widths = ctx.model.widths();
    res.final_widths.assign(widths.begin() + 1, widths.end());
    res.output_dir = ctx.out;
    res.metrics_json = ctx.metrics_json_path();
    res.metrics_csv = ctx.metrics_csv_path();
    res.growth_jsonl = ctx.growth_path();
    res.checkpoint_path = ctx.checkpoint_path();
    return res;
}

Context resume_context(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    Context ctx;
    ctx.out = cfg.output_dir;

    std::ifstream sin(ctx.state_path());
    if (!sin) {
        throw ConfigError("no resumable state at " + ctx.state_path().string() +
                          " (run pretrain first)");
    }
    json sj;
    try {
        sin >> sj;
        if (sj.at("schema").get<std::string>() != kStateSchema) {
            throw ConfigError("unrecognized state schema in " + ctx.state_path().string());
        }
        if (sj.at("condition").get<std::string>() != condition_name(cfg.condition)) {
            throw ConfigError("state was written for condition " +
                              sj.at("condition").get<std::string>() + ", config says " +
                              condition_name(cfg.condition));
        }
        ctx.next_round = sj.at("next_round").get<size_t>();
        ctx.learned = sj.at("learned").get<std::vector<int>>();
        ctx.thresholds = sj.at("thresholds").get<Vec>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid state file: ") + e.what());
    }

    Checkpoint ckpt = load_checkpoint(ctx.checkpoint_path().string());
    ctx.model = std::move(ckpt.model);
    ctx.store = std::move(ckpt.store);

    // architecture may have grown since the config was written
    ExperimentConfig effective = cfg;
    effective.architecture = ctx.model.widths();
    ctx.cfg = effective;
    ctx.split = load_and_split(effective);

    std::ifstream min(ctx.metrics_json_path());
    if (min) {
        json mj;
        try {
            min >> mj;
            for (const auto& rj : mj.at("records")) {
                ctx.records.push_back(record_from_json(rj));
            }
        } catch (const json::exception& e) {
            throw ConfigError(std::string("invalid metrics file: ") + e.what());
        }
    }
    std::ifstream gin(ctx.growth_path());
    if (gin) {
        std::map<size_t, GrowthRound> rounds;
        std::string line;
        while (std::getline(gin, line)) {
            if (line.empty()) continue;
            json gj;
            try {
                gj = json::parse(line);
            } catch (const json::exception& e) {
                throw ConfigError(std::string("invalid growth line: ") + e.what());
            }
            const size_t round = gj.at("round").get<size_t>();
            GrowthRound& gr = rounds[round];
            gr.round = round;
            gr.report.new_class = gj.at("new_class").get<int>();
            LevelReport lr;
            lr.level = gj.at("level").get<size_t>();
            lr.nodes_added = gj.at("nodes_added").get<size_t>();
            lr.iterations = gj.at("iterations").get<size_t>();
            lr.outliers_before = gj.at("outliers_before").get<size_t>();
            lr.outliers_after = gj.at("outliers_after").get<size_t>();
            lr.width_before = gj.at("width_before").get<size_t>();
            lr.width_after = gj.at("width_after").get<size_t>();
            for (const auto& [k, v] : gj.at("mean_re_before").items()) {
                lr.mean_re_before[std::stoi(k)] = v.get<double>();
            }
            for (const auto& [k, v] : gj.at("mean_re_after").items()) {
                lr.mean_re_after[std::stoi(k)] = v.get<double>();
            }
            gr.report.levels.push_back(std::move(lr));
        }
        for (auto& [round, gr] : rounds) ctx.growth.push_back(std::move(gr));
    }
    return ctx;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    Context ctx = init_pretrain(cfg);
    for (size_t r = 1; r <= cfg.presentation_order.size(); ++r) {
        apply_round(ctx, cfg.presentation_order[r - 1], r);
    }
    return result_from(ctx);
}

ExperimentResult run_pretrain(const ExperimentConfig& cfg) {
    Context ctx = init_pretrain(cfg);
    return result_from(ctx);
}

ExperimentResult run_learn_round(const ExperimentConfig& cfg, std::optional<int> klass) {
    Context ctx = resume_context(cfg);
    int target;
    if (klass.has_value()) {
        target = *klass;
    } else {
        const size_t idx = ctx.next_round - 1;
        if (idx >= cfg.presentation_order.size()) {
            throw ConfigError("presentation_order exhausted; pass an explicit class");
        }
        target = cfg.presentation_order[idx];
    }
    if (!ctx.split.train.count(target)) {
        throw ConfigError("class " + std::to_string(target) +
                          " is not part of initial_classes/presentation_order");
    }
    apply_round(ctx, target, ctx.next_round);
    return result_from(ctx);
}

std::vector<size_t> final_widths_from_growth(const std::string& growth_jsonl_path,
                                             size_t levels) {
    std::ifstream in(growth_jsonl_path);
    if (!in) throw DataError("cannot open growth report " + growth_jsonl_path);
    std::vector<size_t> widths(levels, 0);
    std::vector<size_t> best_round(levels, 0);
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json gj;
        try {
            gj = json::parse(line);
            const size_t level = gj.at("level").get<size_t>();
            const size_t round = gj.at("round").get<size_t>();
            const size_t width = gj.at("width_after").get<size_t>();
            if (level < 1 || level > levels) {
                throw DataError("growth report level " + std::to_string(level) +
                                " outside 1.." + std::to_string(levels));
            }
            if (round >= best_round[level - 1]) {
                best_round[level - 1] = round;
                widths[level - 1] = width;
            }
            any = true;
        } catch (const json::exception& e) {
            throw DataError(std::string("invalid growth report line: ") + e.what());
        }
    }
    if (!any) throw DataError("growth report " + growth_jsonl_path + " is empty");
    for (size_t l = 0; l < levels; ++l) {
        if (widths[l] == 0) {
            throw DataError("growth report has no record for level " + std::to_string(l + 1));
        }
    }
    return widths;
}

CompareResult compare_runs(const std::vector<std::string>& metrics_files) {
    if (metrics_files.size() < 2) {
        throw ConfigError("compare needs at least two metrics files");
    }
    CompareResult result;
    for (const auto& path : metrics_files) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open metrics file " + path);
        json mj;
        std::vector<MetricsRecord> records;
        try {
            in >> mj;
            if (!mj.contains("schema") || mj.at("schema").get<std::string>() != kMetricsSchema) {
                throw ConfigError("metrics file " + path + " does not declare schema " +
                                  kMetricsSchema);
            }
            for (const auto& rj : mj.at("records")) records.push_back(record_from_json(rj));
        } catch (const json::exception& e) {
            throw ConfigError("metrics file " + path + " violates the schema: " + e.what());
        }
        if (records.empty()) throw ConfigError("metrics file " + path + " has no records");

        RunSummary summary;
        summary.path = path;
        summary.condition = records.front().condition;
        summary.levels = records.front().widths.size();
        for (const auto& [klass, levels] : records.front().mean_re) {
            if (levels.size() != summary.levels) {
                throw ConfigError("metrics file " + path + " has inconsistent level counts");
            }
            summary.classes.insert(klass);
            summary.initial_re[klass] = levels;
        }
        for (const auto& [klass, levels] : records.back().mean_re) {
            summary.final_re[klass] = levels;
        }
        result.runs.push_back(std::move(summary));
    }
    const RunSummary& first = result.runs.front();
    for (const RunSummary& run : result.runs) {
        if (run.classes != first.classes) {
            throw Error("comparison error: " + run.path + " covers a different class set than " +
                        first.path);
        }
        if (run.levels != first.levels) {
            throw Error("comparison error: " + run.path + " has " + std::to_string(run.levels) +
                        " levels, " + first.path + " has " + std::to_string(first.levels));
        }
    }
    return result;
}

std::string format_compare_table(const CompareResult& result) {
    std::ostringstream out;
    out << "class,level";
    for (const auto& run : result.runs) {
        const std::string tag = run.condition;
        out << "," << tag << "_initial," << tag << "_final," << tag << "_delta";
    }
    out << "\n";
    const RunSummary& first = result.runs.front();
    for (int klass : first.classes) {
        for (size_t level = 1; level <= first.levels; ++level) {
            out << klass << "," << level;
            for (const auto& run : result.runs) {
                const double initial = run.initial_re.at(klass)[level - 1];
                const double final_ = run.final_re.at(klass)[level - 1];
                out << "," << fmt_double(initial) << "," << fmt_double(final_) << ","
                    << fmt_double(final_ - initial);
            }
            out << "\n";
        }
    }
    out << "\n# final full-depth RE across runs (delta columns are vs the first run)\n";
    out << "class";
    for (const auto& run : result.runs) out << "," << run.condition;
    for (size_t k = 1; k < result.runs.size(); ++k) {
        out << "," << result.runs[k].condition << "_delta";
    }
    out << ",best\n";
    for (int klass : first.classes) {
        out << klass;
        double best = 0.0;
        std::string best_name;
        const double base = first.final_re.at(klass)[first.levels - 1];
        for (const auto& run : result.runs) {
            const double v = run.final_re.at(klass)[first.levels - 1];
            out << "," << fmt_double(v);
            if (best_name.empty() || v < best) {
                best = v;
                best_name = run.condition;
            }
        }
        for (size_t k = 1; k < result.runs.size(); ++k) {
            out << ","
                << fmt_double(result.runs[k].final_re.at(klass)[first.levels - 1] - base);
        }
        out << "," << best_name << "\n";
    }
    return out.str();
}

}  // namespace ndl
