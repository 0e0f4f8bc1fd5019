#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "ecfc/checkpoint.hpp"
#include "ecfc/config_io.hpp"
#include "ecfc/error.hpp"
#include "ecfc/forecast.hpp"
#include "ecfc/format.hpp"
#include "ecfc/ingest.hpp"
#include "ecfc/synth.hpp"
#include "ecfc/trainer.hpp"

namespace ecfc::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 42;
constexpr std::uint64_t kTrainingStream = 0x9e3779b97f4a7c15ULL;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

Json load_json(const std::string& path) {
    const auto text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ConfigError(path + " is not valid JSON: " + e.what());
    }
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

// Provenance record written next to every command's outputs.
class Manifest {
public:
    explicit Manifest(const std::string& command) {
        doc_["command"] = command;
        doc_["format"] = "ecfc-manifest v1";
        doc_["inputs"] = Json::array();
        doc_["outputs"] = Json::array();
    }

    void input(const std::string& path) {
        const auto bytes = read_file(path);
        doc_["inputs"].push_back({{"path", path}, {"bytes", bytes.size()}, {"crc32", hex32(crc32_of(bytes))}});
    }
    void output(const fs::path& path) { doc_["outputs"].push_back(path.filename().string()); }
    Json& operator[](const std::string& key) { return doc_[key]; }

    void write(const fs::path& dir) const {
        write_file(dir / (doc_["command"].get<std::string>() + ".manifest.json"), doc_.dump(2) + '\n');
    }

private:
    Json doc_;
};

void refuse_overwrite(const fs::path& target, const std::string& input) {
    std::error_code ec;
    if (fs::exists(target) && fs::equivalent(target, input, ec)) {
        throw IoError("refusing to overwrite input file " + input);
    }
}

// A training config file may also carry file paths and sweep lists.
struct RunConfig {
    TrainConfig train;
    bool val_end_from_series = false;
    std::optional<std::string> series;
    std::optional<std::string> checkpoint_dir;
    std::optional<std::string> output_dir;
    std::vector<std::size_t> window_sizes;
    std::vector<std::size_t> horizons_days;
};

std::vector<std::size_t> count_list(const Json& doc, const char* key) {
    std::vector<std::size_t> out;
    if (!doc.contains(key)) return out;
    const auto& v = doc.at(key);
    if (!v.is_array()) throw ConfigError(std::string("config key '") + key + "' must be a list");
    for (const auto& item : v) {
        if (!item.is_number_integer() || item.get<long long>() < 1) {
            throw ConfigError(std::string("config key '") + key + "' must hold positive integers");
        }
        out.push_back(item.get<std::size_t>());
    }
    return out;
}

std::optional<std::string> path_key(const Json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    if (!doc.at(key).is_string()) throw ConfigError(std::string("config key '") + key + "' must be a path string");
    return doc.at(key).get<std::string>();
}

RunConfig load_run_config(const Globals& g) {
    RunConfig rc;
    Json doc = g.config.empty() ? Json::object() : load_json(g.config);
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (doc.contains("split") && doc["split"].is_object() && doc["split"].contains("val_end") &&
        doc["split"]["val_end"].is_null()) {
        doc["split"].erase("val_end");
        rc.val_end_from_series = true;
    }
    rc.train = train_config_from_json(
        doc, {"series", "checkpoint_dir", "output_dir", "window_sizes", "horizons_days"});
    if (g.seed) rc.train.seed = *g.seed;
    rc.series = path_key(doc, "series");
    rc.checkpoint_dir = path_key(doc, "checkpoint_dir");
    rc.output_dir = path_key(doc, "output_dir");
    rc.window_sizes = count_list(doc, "window_sizes");
    rc.horizons_days = count_list(doc, "horizons_days");
    return rc;
}

fs::path output_dir(const Globals& g, const std::optional<std::string>& from_config = std::nullopt) {
    fs::path dir = !g.out.empty() ? fs::path(g.out) : from_config ? fs::path(*from_config) : fs::path(".");
    make_dir(dir);
    return dir;
}

std::string require_series(const std::string& flag, const std::optional<std::string>& from_config) {
    if (!flag.empty()) return flag;
    if (from_config) return *from_config;
    throw ConfigError("no series file: pass --series or set 'series' in the config");
}

// Comma-separated positive integers, e.g. "10,20,50".
std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
    std::vector<std::size_t> values;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || item.empty()) throw ConfigError(what + " '" + item + "' is not a whole number");
        if (v < 1) throw ConfigError(what + " must be at least 1, got " + item);
        values.push_back(static_cast<std::size_t>(v));
    }
    if (values.empty()) throw ConfigError("empty " + what + " list");
    return values;
}

std::string resolve_checkpoint(const std::string& checkpoint, const std::string& run, const std::string& use) {
    if (!checkpoint.empty() && !run.empty()) throw ConfigError("give either --checkpoint or --run, not both");
    if (!checkpoint.empty()) return checkpoint;
    if (run.empty()) throw ConfigError("no model: pass --checkpoint or --run");
    for (const auto& candidate : {fs::path(run) / "checkpoints" / (use + ".ckpt"), fs::path(run) / (use + ".ckpt")}) {
        if (fs::exists(candidate)) return candidate.string();
    }
    throw IoError("run directory " + run + " has no " + use + ".ckpt");
}

Json number_or_null(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct HorizonRow {
    std::size_t horizon = 0;
    std::size_t covered = 0;
    std::optional<double> mae;
    std::optional<double> mape;
    std::size_t excluded = 0;
};

HorizonRow score(const ForecastResult& r, std::size_t horizon, double zero_floor) {
    std::vector<double> actual, predicted;
    for (std::size_t j = 0; j < horizon; ++j) {
        if (!r.actual[j]) continue;
        actual.push_back(*r.actual[j]);
        predicted.push_back(r.predicted[j]);
    }
    HorizonRow row{horizon, actual.size(), std::nullopt, std::nullopt, 0};
    if (actual.empty()) return row;
    row.mae = mae(actual, predicted);
    try {
        const auto p = mape(actual, predicted, zero_floor);
        row.mape = p.percent;
        row.excluded = p.excluded;
    } catch (const UndefinedMetricError&) {
        row.excluded = actual.size();
    }
    return row;
}

std::string format_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

Json horizon_json(const HorizonRow& row) {
    return {{"horizon_half_hours", row.horizon},
            {"covered_points", row.covered},
            {"mae_kwh", number_or_null(row.mae)},
            {"mape_pct", number_or_null(row.mape)},
            {"excluded_zero_targets", row.excluded}};
}

// ---- commands ---------------------------------------------------------------

struct SynthArgs {
    SynthParams params;
    std::string start = "2019-01-07";
    std::string name = "series.csv";
};

int cmd_synth(const Globals& g, SynthArgs a, std::ostream& out) {
    const auto start = parse_date(a.start, DateFormat::Iso);
    if (!start) throw ConfigError("--start must be a YYYY-MM-DD date");
    a.params.start = *start;
    a.params.seed = g.seed.value_or(kDefaultSeed);
    if (a.params.days < 1) throw ConfigError("--days must be at least 1");
    if (!(a.params.noise_sigma >= 0.0)) throw ConfigError("--noise must be nonnegative");
    const auto series = generate_synthetic(a.params);

    const auto dir = output_dir(g);
    const auto series_path = dir / a.name;
    save_series_file(series_path.string(), series);
    const Json params = {{"start", a.start},           {"days", a.params.days},
                         {"base", a.params.base},      {"amplitude", a.params.amplitude},
                         {"weekly", a.params.weekly},  {"noise_sigma", a.params.noise_sigma},
                         {"seed", a.params.seed},      {"points", series.size()},
                         {"formula", "base + amplitude*sin(2*pi*h_n/48)*(1 + weekly*weekday_factor(d_w)) + "
                                     "N(0, noise_sigma); weekday_factor = -1 on Sat/Sun, 0 otherwise"}};
    const auto params_path = dir / (fs::path(a.name).stem().string() + ".synth.json");
    write_file(params_path, params.dump(2) + '\n');

    Manifest m("synth");
    m["parameters"] = params;
    m["seeds"] = {{"noise", a.params.seed}};
    m.output(series_path);
    m.output(params_path);
    m.write(dir);
    out << "points=" << series.size() << " days=" << a.params.days << '\n';
    return kExitOk;
}

struct IngestArgs {
    std::string input;
    std::string delimiter = ",";
    std::size_t date_column = 0;
    std::size_t first_value_column = 1;
    std::string date_format = "iso";
    std::string header = "auto";
    std::string gap_policy = "strict";
    std::string name = "series.csv";
};

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out) {
    if (a.delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    TableLayout layout;
    layout.delimiter = a.delimiter[0];
    layout.date_column = a.date_column;
    layout.first_value_column = a.first_value_column;
    layout.date_format = a.date_format == "dmy" ? DateFormat::DayMonthYear : DateFormat::Iso;
    layout.header = a.header == "present" ? HeaderMode::Present : a.header == "absent" ? HeaderMode::Absent
                                                                                      : HeaderMode::Auto;
    const auto policy = a.gap_policy == "interpolate" ? GapPolicy::LinearInterpolate
                        : a.gap_policy == "ffill"     ? GapPolicy::ForwardFill
                                                      : GapPolicy::Strict;

    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw IoError("cannot open " + a.input);
    const auto table = parse_table(in, layout);
    if (table.rows.empty()) throw DataError(a.input + " holds no data rows");
    const auto series = flatten(table, policy);

    const auto dir = output_dir(g);
    const auto series_path = dir / a.name;
    refuse_overwrite(series_path, a.input);
    save_series_file(series_path.string(), series);

    Manifest m("ingest");
    m.input(a.input);
    m["layout"] = {{"delimiter", a.delimiter},   {"date_column", a.date_column},
                   {"first_value_column", a.first_value_column},
                   {"date_format", a.date_format}, {"header", a.header},
                   {"gap_policy", a.gap_policy}};
    m["seeds"] = Json::object();
    m.output(series_path);
    m.write(dir);
    out << "points=" << series.size() << " days=" << series.size() / kSlotsPerDay
        << " imputed=" << series.imputed_count() << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string series;
    std::string checkpoint_dir;
    bool keep_epoch_checkpoints = true;
    bool dry_run = false;
};

struct TrainOutcome {
    FitResult fit;
    fs::path dir;
};

TrainOutcome run_training(const RunConfig& rc, const std::string& series_path, const fs::path& dir,
                          const fs::path& checkpoint_dir, bool keep_epochs, const std::string& config_path) {
    auto series = load_series_file(series_path);
    auto config = rc.train;
    if (rc.val_end_from_series) config.split.val_end = series.size();
    config.validate();
    auto result = fit(series, config, FitOptions{checkpoint_dir.string(), keep_epochs, {}});

    std::ostringstream history;
    write_history_csv(history, result.history);
    write_file(dir / "history.csv", history.str());

    Manifest m("train");
    m.input(series_path);
    if (!config_path.empty()) m.input(config_path);
    m["config"] = to_json(config);
    m["seeds"] = {{"init", config.seed}, {"training", config.seed ^ kTrainingStream}};
    m["checkpoint_dir"] = checkpoint_dir.string();
    m["best"] = to_json(result.best.record);
    m.output(dir / "history.csv");
    m.write(dir);
    return {std::move(result), dir};
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out) {
    const auto rc = load_run_config(g);
    const auto series_path = require_series(a.series, rc.series);
    const auto dir = output_dir(g, rc.output_dir);
    const fs::path checkpoints = !a.checkpoint_dir.empty() ? fs::path(a.checkpoint_dir)
                                 : rc.checkpoint_dir         ? fs::path(*rc.checkpoint_dir)
                                                             : dir / "checkpoints";
    if (a.dry_run) {
        const auto series = load_series_file(series_path);
        auto config = rc.train;
        if (rc.val_end_from_series) config.split.val_end = series.size();
        config.validate();
        check_split(config.split, config.schema, series.size());
        Manifest m("train");
        m.input(series_path);
        if (!g.config.empty()) m.input(g.config);
        m["config"] = to_json(config);
        m["seeds"] = {{"init", config.seed}, {"training", config.seed ^ kTrainingStream}};
        m["dry_run"] = true;
        m.write(dir);
        out << "config ok: " << config.layer_count << " layers x " << config.units << " units, "
            << train_targets(config.split, config.schema).size() << " training and "
            << validation_targets(config.split).size() << " validation examples\n";
        return kExitOk;
    }
    const auto outcome = run_training(rc, series_path, dir, checkpoints, a.keep_epoch_checkpoints, g.config);
    const auto& best = outcome.fit.best.record;
    out << "best_epoch,val_mae_kwh,val_mape_pct\n"
        << best.epoch << ',' << format_double(best.val_mae) << ',' << format_double(best.val_mape) << '\n';
    return kExitOk;
}

struct ModelArgs {
    std::string checkpoint;
    std::string run;
    std::string use = "best";
    std::string series;
};

struct ForecastArgs {
    ModelArgs model;
    std::string horizon_days;
};

int cmd_forecast(const Globals& g, const ForecastArgs& a, std::ostream& out) {
    const auto rc = load_run_config(g);
    std::vector<std::size_t> days;
    if (!a.horizon_days.empty()) {
        days = parse_counts(a.horizon_days, "horizon in days");
    } else if (!rc.horizons_days.empty()) {
        days = rc.horizons_days;
    } else {
        throw ConfigError("no forecast horizon: pass --horizon-days or set 'horizons_days'");
    }
    const auto ckpt_path = resolve_checkpoint(a.model.checkpoint, a.model.run, a.model.use);
    const auto series_path = require_series(a.model.series, rc.series);
    const auto checkpoint = load_checkpoint(ckpt_path);
    const auto series = load_series_file(series_path);

    std::size_t longest = 0;
    for (auto d : days) longest = std::max(longest, d * kSlotsPerDay);
    const auto trajectory = forecast(checkpoint, series, longest);

    const auto dir = output_dir(g, rc.output_dir);
    std::ostringstream csv;
    write_forecast_csv(csv, trajectory);
    write_file(dir / "forecast.csv", csv.str());

    Json metrics = Json::array();
    out << "horizon_half_hours,mae_kwh,mape_pct,excluded_zero_targets\n";
    for (auto d : days) {
        const auto row = score(trajectory, d * kSlotsPerDay, checkpoint.config.zero_floor);
        metrics.push_back(horizon_json(row));
        out << row.horizon << ',' << format_opt(row.mae) << ',' << format_opt(row.mape) << ',' << row.excluded
            << '\n';
    }
    write_file(dir / "metrics.json", metrics.dump(2) + '\n');

    Manifest m("forecast");
    m.input(ckpt_path);
    m.input(series_path);
    m["checkpoint_epoch"] = checkpoint.epoch;
    m["start_index"] = trajectory.start_index;
    m["horizons_days"] = days;
    m["seeds"] = {{"init", checkpoint.config.seed}};
    m.output(dir / "forecast.csv");
    m.output(dir / "metrics.json");
    m.write(dir);
    return kExitOk;
}

int cmd_evaluate(const Globals& g, const ModelArgs& a, std::ostream& out) {
    const auto rc = load_run_config(g);
    const auto ckpt_path = resolve_checkpoint(a.checkpoint, a.run, a.use);
    const auto series_path = require_series(a.series, rc.series);
    const auto checkpoint = load_checkpoint(ckpt_path);
    const auto series = load_series_file(series_path);
    const auto result = validate(checkpoint, series);
    const auto start = checkpoint.config.split.train_end();

    const auto dir = output_dir(g, rc.output_dir);
    std::string csv = "timestamp,predicted_kwh,actual_kwh\n";
    for (std::size_t j = 0; j < result.predicted.size(); ++j) {
        csv += format_timestamp(series.time_at(start + j)) + ',' + format_double(result.predicted[j]) + ',' +
               format_double(result.actual[j]) + '\n';
    }
    write_file(dir / "validation.csv", csv);
    const Json report = {{"epoch", checkpoint.epoch},
                         {"start_index", start},
                         {"points", result.predicted.size()},
                         {"mae_kwh", result.mae},
                         {"mape_pct", result.mape},
                         {"excluded_zero_targets", result.excluded}};
    write_file(dir / "evaluation.json", report.dump(2) + '\n');

    Manifest m("evaluate");
    m.input(ckpt_path);
    m.input(series_path);
    m["seeds"] = {{"init", checkpoint.config.seed}};
    m.output(dir / "validation.csv");
    m.output(dir / "evaluation.json");
    m.write(dir);
    out << "val_mae_kwh,val_mape_pct\n" << format_double(result.mae) << ',' << format_double(result.mape) << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::string series;
    std::string window_sizes;
    std::string horizon_days;
    std::string use = "best";
};

int cmd_sweep(const Globals& g, const SweepArgs& a, std::ostream& out) {
    const auto rc = load_run_config(g);
    const auto windows = !a.window_sizes.empty() ? parse_counts(a.window_sizes, "window size") : rc.window_sizes;
    const auto days = !a.horizon_days.empty() ? parse_counts(a.horizon_days, "horizon in days") : rc.horizons_days;
    if (windows.empty()) throw ConfigError("no window sizes: pass --window-sizes or set 'window_sizes'");
    if (days.empty()) throw ConfigError("no horizons: pass --horizon-days or set 'horizons_days'");
    if (a.use != "best" && a.use != "final") throw ConfigError("--use must be best or final");
    if (rc.train.schema.kind != SchemaKind::Windowed) throw ConfigError("sweep needs the windowed schema");
    const auto series_path = require_series(a.series, rc.series);
    const auto series = load_series_file(series_path);
    const auto dir = output_dir(g, rc.output_dir);

    std::string csv = "window_size,best_epoch,val_mae_kwh,val_mape_pct,horizon_half_hours,mae_kwh,mape_pct\n";
    out << "window_size,horizon_half_hours,mae_kwh,mape_pct\n";
    std::size_t longest = 0;
    for (auto d : days) longest = std::max(longest, d * kSlotsPerDay);
    for (auto n : windows) {
        auto run = rc;
        run.train.schema.window = n;
        const auto run_dir = dir / ("window_" + std::to_string(n));
        make_dir(run_dir);
        const auto outcome = run_training(run, series_path, run_dir, run_dir / "checkpoints", false, g.config);
        const auto& chosen = a.use == "best" ? outcome.fit.best : outcome.fit.last;
        const auto trajectory = forecast(chosen, series, longest);
        const auto& best = outcome.fit.best.record;
        for (auto d : days) {
            const auto row = score(trajectory, d * kSlotsPerDay, run.train.zero_floor);
            csv += std::to_string(n) + ',' + std::to_string(best.epoch) + ',' + format_double(best.val_mae) + ',' +
                   format_double(best.val_mape) + ',' + std::to_string(row.horizon) + ',' + format_opt(row.mae) +
                   ',' + format_opt(row.mape) + '\n';
            out << n << ',' << row.horizon << ',' << format_opt(row.mae) << ',' << format_opt(row.mape) << '\n';
        }
    }
    write_file(dir / "sweep.csv", csv);

    Manifest m("sweep");
    m.input(series_path);
    if (!g.config.empty()) m.input(g.config);
    m["config"] = to_json(rc.train);
    m["window_sizes"] = windows;
    m["horizons_days"] = days;
    m["checkpoint_used"] = a.use;
    m["seeds"] = {{"init", rc.train.seed}, {"training", rc.train.seed ^ kTrainingStream}};
    m.output(dir / "sweep.csv");
    m.write(dir);
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Half-hourly building energy forecasting with a multi-layer LSTM", "ecfc"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON run config: training parameters, file paths, sweep lists");
    app.add_option("--seed", g.seed, "Seed for initialization, batching, dropout and synthetic noise (default 42)");
    app.add_option("--out", g.out, "Output directory (default: config output_dir, else current directory)");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a synthetic series with a known generator");
    c_synth->add_option("--days", synth.params.days, "Number of days")->capture_default_str();
    c_synth->add_option("--base", synth.params.base, "Mean level, kWh")->capture_default_str();
    c_synth->add_option("--amplitude", synth.params.amplitude, "Daily sine amplitude, kWh")->capture_default_str();
    c_synth->add_option("--weekly", synth.params.weekly, "Weekend modulation of the daily swing")
        ->capture_default_str();
    c_synth->add_option("--noise", synth.params.noise_sigma, "Gaussian noise sigma, kWh")->capture_default_str();
    c_synth->add_option("--start", synth.start, "First day, YYYY-MM-DD")->capture_default_str();
    c_synth->add_option("--name", synth.name, "Series file name inside --out")->capture_default_str();

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Parse a day-per-row table into a canonical series file");
    c_ingest->add_option("input", ingest.input, "Delimited text file, one day per row")->required();
    c_ingest->add_option("--delimiter", ingest.delimiter, "Cell delimiter")->capture_default_str();
    c_ingest->add_option("--date-column", ingest.date_column, "Zero-based date column")->capture_default_str();
    c_ingest->add_option("--first-value-column", ingest.first_value_column,
                         "Zero-based column of the 00:00 reading; 48 columns follow")
        ->capture_default_str();
    c_ingest->add_option("--date-format", ingest.date_format, "iso (YYYY-MM-DD) or dmy (DD/MM/YYYY)")
        ->check(CLI::IsMember({"iso", "dmy"}))
        ->capture_default_str();
    c_ingest->add_option("--header", ingest.header, "auto, present or absent")
        ->check(CLI::IsMember({"auto", "present", "absent"}))
        ->capture_default_str();
    c_ingest->add_option("--gap-policy", ingest.gap_policy, "strict, interpolate or ffill")
        ->check(CLI::IsMember({"strict", "interpolate", "ffill"}))
        ->capture_default_str();
    c_ingest->add_option("--name", ingest.name, "Series file name inside --out")->capture_default_str();

    TrainArgs train;
    auto* c_train = app.add_subcommand(
        "train",
        "Train and validate; writes checkpoints and history.csv.\n"
        "Config defaults: batch_size 10, epochs 50, learning_rate 1e-3, dropout_keep 1, window_size 96,\n"
        "layer_count 1, units 32, schema windowed, input_mode flat, seed 42, shuffle false, clip_norm 5,\n"
        "split {train_start 0, train_len 2400, val_end 2880 (null = series length)},\n"
        "adam_beta1 0.9, adam_beta2 0.999, adam_epsilon 1e-8, zero_floor 1e-9");
    c_train->add_option("--series", train.series, "Series file (overrides config 'series')");
    c_train->add_option("--checkpoint-dir", train.checkpoint_dir, "Checkpoint directory (default <out>/checkpoints)");
    c_train->add_flag("!--no-epoch-checkpoints", train.keep_epoch_checkpoints,
                      "Keep only best.ckpt and final.ckpt");
    c_train->add_flag("--dry-run", train.dry_run, "Resolve and check the config against the series, then stop");

    ForecastArgs fc;
    auto* c_forecast = app.add_subcommand("forecast", "Autoregressive forecast from the end of the training range");
    auto add_model_options = [](CLI::App* cmd, ModelArgs& m) {
        cmd->add_option("--checkpoint", m.checkpoint, "Checkpoint file");
        cmd->add_option("--run", m.run, "Training output directory");
        cmd->add_option("--use", m.use, "Checkpoint to take from --run: best or final")
            ->check(CLI::IsMember({"best", "final"}))
            ->capture_default_str();
        cmd->add_option("--series", m.series, "Series file (overrides config 'series')");
    };
    add_model_options(c_forecast, fc.model);
    c_forecast->add_option("--horizon-days", fc.horizon_days, "Comma-separated horizons in days, e.g. 10,20,50");

    ModelArgs ev;
    auto* c_evaluate = app.add_subcommand("evaluate", "Feedback validation of a checkpoint on its validation range");
    add_model_options(c_evaluate, ev);

    SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "Train one model per window size and score forecast horizons");
    c_sweep->add_option("--series", sw.series, "Series file (overrides config 'series')");
    c_sweep->add_option("--window-sizes", sw.window_sizes, "Comma-separated window sizes in half hours");
    c_sweep->add_option("--horizon-days", sw.horizon_days, "Comma-separated horizons in days");
    c_sweep->add_option("--use", sw.use, "Checkpoint to forecast from: best or final")
        ->check(CLI::IsMember({"best", "final"}))
        ->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_synth) return cmd_synth(g, synth, out);
        if (*c_ingest) return cmd_ingest(g, ingest, out);
        if (*c_train) return cmd_train(g, train, out);
        if (*c_forecast) return cmd_forecast(g, fc, out);
        if (*c_evaluate) return cmd_evaluate(g, ev, out);
        if (*c_sweep) return cmd_sweep(g, sw, out);
    } catch (const ConfigError& e) {
        err << "ecfc: config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractError& e) {
        err << "ecfc: usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "ecfc: data error: " << e.what() << '\n';
        return kExitData;
    } catch (const CheckpointError& e) {
        err << "ecfc: data error: " << e.what() << '\n';
        return kExitData;
    } catch (const IoError& e) {
        err << "ecfc: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "ecfc: I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "ecfc: error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ecfc::cli
