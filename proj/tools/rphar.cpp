// rphar: command-line front end for recurrence-plot activity recognition.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rphar/rphar.hpp"

namespace fs = std::filesystem;
using namespace rphar;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IngestError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Dataset load_any(const std::string& path, const std::string& format) {
    if (format == "wharf") return load_wharf(path);
    if (format == "csv") return load_csv_dir(path);
    throw ConfigError("unknown dataset format '" + format + "' (expected wharf or csv)");
}

std::set<std::string> parse_drop(const std::string& list) {
    std::set<std::string> out;
    for (const auto& item : ExperimentConfig::split_list(list)) out.insert(normalize_label(item));
    return out;
}

void print_class_table(const Dataset& ds, std::ostream& out) {
    out << "  #  class               size\n";
    const auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%3zu  %-18s %5zu\n", c + 1, counts[c].first.c_str(), counts[c].second);
        out << buf;
    }
    out << "     total              " << ds.samples.size() << "\n";
}

/// Fresh output directory; refuses to touch a non-empty existing one unless forced.
void prepare_output_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError("output path exists and is not a directory: " + dir.string());
        if (!fs::is_empty(dir)) {
            if (!force) throw ConfigError("output directory is not empty: " + dir.string() + " (use --force)");
            fs::remove_all(dir);
        }
    }
}

// ---------------------------------------------------------------------------------------------

struct IngestArgs {
    std::string input, format = "wharf", output, drop;
    double rate = kWharfRateHz;
    bool force = false;
};

int cmd_ingest(const IngestArgs& a) {
    Dataset ds = load_any(a.input, a.format);
    if (a.format == "csv")
        for (auto& s : ds.samples) s.sample_rate_hz = a.rate;
    ds = filter_classes(ds, parse_drop(a.drop));

    const fs::path out(a.output);
    prepare_output_dir(out, a.force);
    fs::path tmp = out;
    tmp += ".partial";
    fs::remove_all(tmp);
    try {
        fs::create_directories(tmp);
        write_csv_dir(ds, tmp);
        nlohmann::json manifest;
        manifest["format"] = "rphar-dataset";
        manifest["version"] = 1;
        manifest["source"] = a.input;
        manifest["sample_rate_hz"] = ds.samples.empty() ? a.rate : ds.samples.front().sample_rate_hz;
        auto classes = nlohmann::json::array();
        for (const auto& [label, count] : ds.class_counts()) classes.push_back({{"label", label}, {"count", count}});
        manifest["classes"] = classes;
        manifest["total"] = ds.samples.size();
        auto samples = nlohmann::json::array();
        for (const auto& s : ds.samples)
            samples.push_back({{"id", s.id}, {"label", s.label}, {"length", s.length()},
                               {"file", s.label + "/" + s.id + ".csv"}});
        manifest["samples"] = samples;
        write_text(tmp / "manifest.json", manifest.dump(2) + "\n");
        if (fs::exists(out)) fs::remove(out);
        fs::rename(tmp, out);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    std::cout << "dataset: " << ds.samples.size() << " samples, " << ds.classes.size() << " classes\n";
    print_class_table(ds, std::cout);
    return 0;
}

// ---------------------------------------------------------------------------------------------

struct RenderArgs {
    std::string dataset, format = "csv", output, variant = "rgb", polarity = "dark", samples;
    int m = 2, d = 2;
    std::optional<double> epsilon;
    std::size_t limit = 0;
    bool gallery = false;
};

/// Nearest-neighbour resize, used for gallery thumbnails.
RpImage resize_nearest(const RpImage& src, int w, int h) {
    RpImage out(src.channels, w, h, src.variant);
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(c, x, y) = src.at(c, static_cast<int>(static_cast<long>(x) * src.width / w),
                                         static_cast<int>(static_cast<long>(y) * src.height / h));
    return out;
}

int cmd_render_rp(const RenderArgs& a) {
    const Dataset ds = load_any(a.dataset, a.format);
    RpConfig cfg;
    cfg.m = a.m;
    cfg.d = a.d;
    cfg.epsilon = a.epsilon;
    cfg.polarity = parse_polarity(a.polarity);
    cfg.validate();
    const RpVariant variant = parse_rp_variant(a.variant);

    std::set<std::string> wanted;
    for (const auto& id : ExperimentConfig::split_list(a.samples)) wanted.insert(id);

    const fs::path out(a.output);
    fs::create_directories(out);
    std::map<std::string, std::vector<RpImage>> thumbs;
    std::size_t written = 0, skipped = 0;
    for (const auto& s : ds.samples) {
        if (!wanted.empty() && !wanted.contains(s.id)) continue;
        if (a.limit && written >= a.limit) break;
        RpImage img;
        try {
            img = render_rp(s, variant, cfg);
        } catch (const LengthError& e) {
            std::cerr << "warning: " << s.id << ": " << e.what() << "\n";
            ++skipped;
            continue;
        }
        fs::create_directories(out / s.label);
        png::write_file(out / s.label / (s.id + ".png"), img);
        ++written;
        if (a.gallery && thumbs[s.label].size() < 8) {
            const int th = 96;
            const int tw = img.width == img.height ? th : th * img.width / img.height;
            thumbs[s.label].push_back(resize_nearest(img, tw, th));
        }
    }
    for (const auto& [label, list] : thumbs) {
        int w = 0;
        for (const auto& t : list) w += t.width + 4;
        RpImage sheet(list.front().channels, w, list.front().height, list.front().variant);
        std::fill(sheet.pixels.begin(), sheet.pixels.end(), 255);
        int x0 = 0;
        for (const auto& t : list) {
            for (int c = 0; c < t.channels; ++c)
                for (int y = 0; y < t.height; ++y)
                    for (int x = 0; x < t.width; ++x) sheet.at(c, x0 + x, y) = t.at(c, x, y);
            x0 += t.width + 4;
        }
        png::write_file(out / ("gallery_" + label + ".png"), sheet);
    }
    std::cout << "wrote " << written << " plot(s)";
    if (skipped) std::cout << ", skipped " << skipped << " too-short sample(s)";
    std::cout << "\n";
    return 0;
}

// ---------------------------------------------------------------------------------------------

struct ExtractArgs {
    std::string dataset, format = "csv", output, feature, descriptor, variant = "rgb";
    int stride = 6, patch = 16, m = 2, d = 2;
    unsigned jobs = 1;
};

int cmd_extract(const ExtractArgs& a) {
    if (a.feature.empty() == a.descriptor.empty()) throw ConfigError("pass exactly one of --feature or --descriptor");
    const Dataset ds = load_any(a.dataset, a.format);
    std::ostringstream csv;
    if (!a.feature.empty()) {
        const BaselineKind kind = parse_baseline(a.feature);
        std::vector<FeatureVector> rows(ds.samples.size());
        parallel_for(ds.samples.size(), a.jobs, [&](std::size_t i) { rows[i] = baseline_feature(ds.samples[i], kind); });
        csv << "sample_id,label";
        if (!rows.empty())
            for (std::size_t j = 0; j < rows.front().values.size(); ++j) csv << ',' << rows.front().descriptor_id << '_' << j;
        csv << '\n';
        for (std::size_t i = 0; i < rows.size(); ++i) {
            csv << ds.samples[i].id << ',' << ds.samples[i].label;
            for (double v : rows[i].values) csv << ',' << format_double(v);
            csv << '\n';
        }
    } else {
        const DescriptorKind kind = parse_descriptor_kind(a.descriptor);
        const RpVariant variant = parse_rp_variant(a.variant);
        RpConfig rp;
        rp.m = a.m;
        rp.d = a.d;
        const GridSpec grid{a.stride, a.patch};
        grid.validate();
        const char* env = std::getenv("RPHAR_CACHE_DIR");
        std::optional<DescriptorCache> cache;
        if (env && *env) cache.emplace(env);
        std::vector<std::string> lines(ds.samples.size());
        parallel_for(ds.samples.size(), a.jobs, [&](std::size_t i) {
            const auto& s = ds.samples[i];
            try {
                const std::string key = DescriptorCache::key(s, variant, rp, kind, grid);
                std::optional<LocalDescriptorSet> set;
                if (cache) set = cache->load(key);
                if (!set) {
                    set = extract_descriptors(render_rp(s, variant, rp), kind, grid);
                    prepare_for_coding(*set);
                    if (cache) cache->store(key, *set);
                }
                lines[i] = s.id + "," + s.label + "," + std::to_string(set->width) + "," + std::to_string(set->height) +
                           "," + std::to_string(set->size()) + "," + std::to_string(set->dim);
            } catch (const EmptyGridError&) {
                lines[i] = s.id + "," + s.label + ",0,0,0," + std::to_string(descriptor_dim(kind));
            } catch (const LengthError&) {
                lines[i] = s.id + "," + s.label + ",0,0,0," + std::to_string(descriptor_dim(kind));
            }
        });
        csv << "sample_id,label,width,height,points,dim\n";
        for (const auto& l : lines) csv << l << '\n';
    }
    if (a.output.empty() || a.output == "-") std::cout << csv.str();
    else write_text(a.output, csv.str());
    return 0;
}

// ---------------------------------------------------------------------------------------------

struct RunArgs {
    std::string config, output;
    std::vector<std::string> sets, sweeps;
    unsigned jobs = 1;
    bool force = false;
};

void write_report_dir(const fs::path& dir, const ExperimentConfig& cfg, const EvalReport& rep) {
    write_text(dir / "config.txt", cfg.to_text());
    write_text(dir / "report.json", to_json(rep).dump(1) + "\n");
    write_text(dir / "summary.txt", text_summary(rep));
    write_text(dir / "accuracy.csv", accuracy_table(rep));
    png::write_file(dir / "confusion.png", plot::confusion_heatmap(rep.total_confusion()));
    std::ostringstream stamp;
    stamp << "config_hash " << cfg.hash() << "\n"
          << "method " << rep.method_id << "\n"
          << "master_seed " << cfg.master_seed << "\n"
          << "codebook_seed " << cfg.codebook_seed << "\n"
          << "svm_seed " << cfg.svm_seed << "\n"
          << "split_fingerprint " << rep.split_fingerprint << "\n"
          << "runs " << rep.runs.size() << (rep.single_run() ? " (single run: no confidence interval)" : "") << "\n";
    write_text(dir / "stamp.txt", stamp.str());
}

EvalReport run_one(const ExperimentConfig& cfg, const fs::path& dir, unsigned jobs, bool force) {
    cfg.validate();
    const Dataset ds = load_configured_dataset(cfg);
    const SplitPlan plan = make_splits(ds, cfg.per_class, cfg.runs, cfg.master_seed);
    RunOptions opt;
    opt.jobs = jobs;
    if (const char* env = std::getenv("RPHAR_CACHE_DIR"); env && *env) opt.cache_dir = fs::path(env);

    prepare_output_dir(dir, force);
    fs::path tmp = dir;
    tmp += ".partial";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    try {
        EvalReport rep = run_experiment(ds, cfg.method(), plan, opt);
        rep.config_hash = cfg.hash();
        fs::create_directories(tmp);
        write_report_dir(tmp, cfg, rep);
        if (fs::exists(dir)) fs::remove(dir);
        fs::create_directories(dir.parent_path().empty() ? fs::path(".") : dir.parent_path());
        fs::rename(tmp, dir);
        return rep;
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }
}

int cmd_run(const RunArgs& a) {
    ExperimentConfig base = a.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(a.config);
    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        base.set(ExperimentConfig::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (!a.output.empty()) base.output_dir = a.output;
    if (base.output_dir.empty()) throw ConfigError("no output directory (set output.dir or pass --output)");

    std::vector<SweepAxis> axes;
    for (const auto& s : a.sweeps) axes.push_back(SweepAxis::parse(s));
    const fs::path root(base.output_dir);

    if (axes.empty()) {
        const EvalReport rep = run_one(base, root, a.jobs, a.force);
        std::cout << text_summary(rep);
        return 0;
    }

    const auto configs = expand_sweep(base, axes);
    prepare_output_dir(root, a.force);
    fs::create_directories(root);
    std::ostringstream table;
    table << "index,config_hash";
    for (const auto& ax : axes) table << ',' << ax.key;
    table << ",mean_normalized_accuracy,ci95_half_width\n";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        ExperimentConfig cfg = configs[i];
        char name[64];
        std::snprintf(name, sizeof name, "%03zu_%s", i + 1, cfg.hash().c_str());
        cfg.output_dir = (root / name).string();
        std::cout << "== sweep point " << i + 1 << "/" << configs.size() << " (" << name << ")\n";
        const EvalReport rep = run_one(cfg, root / name, a.jobs, false);
        std::cout << text_summary(rep);
        table << i + 1 << ',' << cfg.hash();
        for (const auto& ax : axes) table << ',' << cfg.get(ax.key);
        table << ',' << format_double(rep.mean_accuracy) << ','
              << (rep.half_width ? format_double(*rep.half_width) : std::string("NA")) << '\n';
    }
    write_text(root / "sweep.csv", table.str());
    return 0;
}

// ---------------------------------------------------------------------------------------------

EvalReport load_report(const std::string& path) {
    fs::path p(path);
    if (fs::is_directory(p)) p /= "report.json";
    try {
        return report_from_json(nlohmann::json::parse(read_text(p)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

struct CompareArgs {
    std::string a;
    std::vector<std::string> others;
    std::string png;
    double alpha = 0.05;
};

int cmd_compare(const CompareArgs& args) {
    const EvalReport a = load_report(args.a);
    std::vector<Interval> intervals;
    std::cout << "A: " << a.method_id << "\n";
    for (std::size_t i = 0; i < args.others.size(); ++i) {
        const EvalReport b = load_report(args.others[i]);
        const PairedResult r = paired_class_test(a, b, args.alpha);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%zu. A vs %s: mean difference %+.4f, %.0f%% CI [%+.4f, %+.4f] -> %s\n", i + 1,
                      b.method_id.c_str(), r.difference.mean, 100.0 * (1.0 - args.alpha), r.difference.lower(),
                      r.difference.upper(), to_string(r.verdict).c_str());
        std::cout << buf;
        intervals.push_back(r.difference);
    }
    if (!args.png.empty()) png::write_file(args.png, plot::interval_chart(intervals));
    return 0;
}

struct ReportArgs {
    std::string report, png;
};

int cmd_report(const ReportArgs& a) {
    const EvalReport rep = load_report(a.report);
    std::cout << text_summary(rep);
    std::cout << "confusion matrix (summed over runs; rows = true class):\n";
    for (const auto& row : rep.total_confusion()) {
        for (std::size_t v : row) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%5zu", v);
            std::cout << buf;
        }
        std::cout << "\n";
    }
    if (!a.png.empty()) png::write_file(a.png, plot::confusion_heatmap(rep.total_confusion()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrence-plot human activity recognition"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Convert a dataset to the canonical CSV layout");
    c_ingest->add_option("--input,-i", ingest.input, "Dataset root")->required();
    c_ingest->add_option("--format", ingest.format, "wharf or csv")->check(CLI::IsMember({"wharf", "csv"}));
    c_ingest->add_option("--output,-o", ingest.output, "Output directory")->required();
    c_ingest->add_option("--drop", ingest.drop, "Comma-separated classes to discard");
    c_ingest->add_option("--rate", ingest.rate, "Sample rate in Hz for csv input");
    c_ingest->add_flag("--force", ingest.force, "Replace a non-empty output directory");

    RenderArgs render;
    auto* c_render = app.add_subcommand("render-rp", "Render recurrence plots as PNG");
    c_render->add_option("--dataset", render.dataset, "Dataset root")->required();
    c_render->add_option("--format", render.format, "csv or wharf")->check(CLI::IsMember({"wharf", "csv"}));
    c_render->add_option("--output,-o", render.output, "Output directory")->required();
    c_render->add_option("--variant", render.variant, "gray, gray-concat or rgb");
    c_render->add_option("--m", render.m, "Embedding dimension");
    c_render->add_option("--d", render.d, "Embedding delay");
    c_render->add_option("--epsilon", render.epsilon, "Threshold; omit for distance plots");
    c_render->add_option("--polarity", render.polarity, "dark or light");
    c_render->add_option("--samples", render.samples, "Comma-separated sample ids");
    c_render->add_option("--limit", render.limit, "Maximum number of plots");
    c_render->add_flag("--gallery", render.gallery, "Also write per-class contact sheets");

    ExtractArgs extract;
    auto* c_extract = app.add_subcommand("extract", "Compute baseline features or dense descriptors");
    c_extract->add_option("--dataset", extract.dataset, "Dataset root")->required();
    c_extract->add_option("--format", extract.format, "csv or wharf")->check(CLI::IsMember({"wharf", "csv"}));
    c_extract->add_option("--feature", extract.feature, "Baseline feature (writes a feature matrix CSV)");
    c_extract->add_option("--descriptor", extract.descriptor, "Dense descriptor kind (fills RPHAR_CACHE_DIR)");
    c_extract->add_option("--variant", extract.variant, "RP variant for --descriptor");
    c_extract->add_option("--stride", extract.stride, "Grid stride");
    c_extract->add_option("--patch", extract.patch, "Patch size");
    c_extract->add_option("--output,-o", extract.output, "Output CSV (default stdout)");
    c_extract->add_option("--jobs,-j", extract.jobs, "Worker threads");

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "Run the evaluation protocol for one configuration or a sweep");
    c_run->add_option("--config,-c", run.config, "Config file (key = value)");
    c_run->add_option("--set", run.sets, "Override a config key: key=value");
    c_run->add_option("--sweep", run.sweeps, "Sweep a key over values: key=v1,v2");
    c_run->add_option("--output,-o", run.output, "Report directory (overrides output.dir)");
    c_run->add_option("--jobs,-j", run.jobs, "Worker threads");
    c_run->add_flag("--force", run.force, "Replace a non-empty output directory");

    CompareArgs compare;
    auto* c_compare = app.add_subcommand("compare", "Paired per-class test of report A against others");
    c_compare->add_option("a", compare.a, "Report A (report.json or its directory)")->required();
    c_compare->add_option("others", compare.others, "Reports compared against A")->required();
    c_compare->add_option("--png", compare.png, "Write the interval chart");
    c_compare->add_option("--alpha", compare.alpha, "Significance level");

    ReportArgs report;
    auto* c_report = app.add_subcommand("report", "Print a report and draw its confusion matrix");
    c_report->add_option("report", report.report, "report.json or its directory")->required();
    c_report->add_option("--png", report.png, "Write the confusion heatmap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*c_ingest) return cmd_ingest(ingest);
        if (*c_render) return cmd_render_rp(render);
        if (*c_extract) return cmd_extract(extract);
        if (*c_run) return cmd_run(run);
        if (*c_compare) return cmd_compare(compare);
        if (*c_report) return cmd_report(report);
    } catch (const rphar::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
