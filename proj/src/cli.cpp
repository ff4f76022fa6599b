#include "fracflow/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>
#include <thread>

#include "fracflow/image_io.hpp"

namespace fracflow::cli {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    return parts;
}

double parse_real(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v = 0.0;
    if (!(in >> v) || !(in >> std::ws).eof()) {
        throw ValidationError(key + ": expected a number, got '" + text + "'");
    }
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_real(key, text);
    if (v != static_cast<double>(static_cast<int>(v))) {
        throw ValidationError(key + ": expected an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

// Full-precision reals so any CSV row can be fed back verbatim.
std::string fmt_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

const std::vector<std::string>& param_keys() {
    static const std::vector<std::string> keys = {
        "lambda",    "theta", "epsilon", "eta",       "n_scales",           "n_warps",
        "n_maxiter", "lambda_sb", "alpha", "inner_tol", "pad", "bregman_max_passes",
        "gs_sweeps"};
    return keys;
}

std::string param_header() {
    std::string h;
    for (const auto& k : param_keys()) h += "," + k;
    return h;
}

std::string param_row(const SolverParams& p) {
    std::ostringstream s;
    s << ',' << fmt_exact(p.lambda) << ',' << fmt_exact(p.theta) << ',' << fmt_exact(p.epsilon)
      << ',' << fmt_exact(p.eta) << ',' << p.n_scales << ',' << p.n_warps << ',' << p.n_maxiter
      << ',' << fmt_exact(p.lambda_sb) << ',' << fmt_exact(p.alpha) << ','
      << fmt_exact(p.inner_tol) << ',' << p.pad << ',' << p.bregman_max_passes << ','
      << p.gs_sweeps;
    return s.str();
}

void set_param(SolverParams& p, const std::string& key, double value) {
    if (key == "alpha") p.alpha = value;
    else if (key == "lambda") p.lambda = value;
    else if (key == "theta") p.theta = value;
    else if (key == "lambda_sb") p.lambda_sb = value;
    else throw ValidationError("sweep_param must be one of alpha, lambda, theta, lambda_sb");
}

void require_path(const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ValidationError(std::string(key) + " must be given");
}

std::string region_label(std::size_t i) { return "region" + std::to_string(i + 1); }

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write CSV: " + path.string());
    f.imbue(std::locale::classic());
    return f;
}

// Flow as stored in a .flo file (float32 components).
VectorField as_stored(VectorField f) {
    for (Plane* p : {&f.x, &f.y}) {
        for (auto& v : p->values()) v = static_cast<float>(v);
    }
    return f;
}

struct FlowRun {
    VectorField flow;
    FlowTrace trace;
    double seconds = 0.0;
};

FlowRun compute_flow(const RunConfig& cfg, const SolverParams& params) {
    params.validate();
    require_path(cfg.frame0, "frame0");
    require_path(cfg.frame1, "frame1");
    const GrayImage i0 = read_image(cfg.frame0);
    const GrayImage i1 = read_image(cfg.frame1);
    FlowRun run;
    const auto start = std::chrono::steady_clock::now();
    run.flow = optical_flow(i0, i1, params, &run.trace);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!all_finite(run.flow)) {
        throw NumericalError("non-finite flow detected");
    }
    return run;
}

bool energy_descends(const FlowTrace& trace) {
    return std::all_of(trace.warps.begin(), trace.warps.end(),
                       [](const WarpTrace& w) { return w.energy_end <= w.energy_start; });
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "region" && entries.count(key)) {
            entries[key] += ";" + value;
        } else {
            entries[key] = value;
        }
    }
    return entries;
}

RegionSpec parse_region(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 4) {
        throw ValidationError("region must be x0,y0,x1,y1, got '" + text + "'");
    }
    return {parse_int("region", parts[0]), parse_int("region", parts[1]),
            parse_int("region", parts[2]), parse_int("region", parts[3])};
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    for (const auto& part : split(text, ',')) {
        if (!part.empty()) values.push_back(parse_real("sweep_values", part));
    }
    return values;
}

void apply_config(const std::map<std::string, std::string>& entries, RunConfig& cfg) {
    SolverParams& p = cfg.params;
    const std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"lambda", [&](const std::string& v) { p.lambda = parse_real("lambda", v); }},
        {"theta", [&](const std::string& v) { p.theta = parse_real("theta", v); }},
        {"epsilon", [&](const std::string& v) { p.epsilon = parse_real("epsilon", v); }},
        {"eta", [&](const std::string& v) { p.eta = parse_real("eta", v); }},
        {"n_scales", [&](const std::string& v) { p.n_scales = parse_int("n_scales", v); }},
        {"n_warps", [&](const std::string& v) { p.n_warps = parse_int("n_warps", v); }},
        {"n_maxiter", [&](const std::string& v) { p.n_maxiter = parse_int("n_maxiter", v); }},
        {"lambda_sb", [&](const std::string& v) { p.lambda_sb = parse_real("lambda_sb", v); }},
        {"alpha", [&](const std::string& v) { p.alpha = parse_real("alpha", v); }},
        {"inner_tol", [&](const std::string& v) { p.inner_tol = parse_real("inner_tol", v); }},
        {"pad", [&](const std::string& v) { p.pad = parse_int("pad", v); }},
        {"bregman_max_passes",
         [&](const std::string& v) { p.bregman_max_passes = parse_int("bregman_max_passes", v); }},
        {"gs_sweeps", [&](const std::string& v) { p.gs_sweeps = parse_int("gs_sweeps", v); }},
        {"frame0", [&](const std::string& v) { cfg.frame0 = v; }},
        {"frame1", [&](const std::string& v) { cfg.frame1 = v; }},
        {"gt", [&](const std::string& v) { cfg.gt = v; }},
        {"flow", [&](const std::string& v) { cfg.flow = v; }},
        {"out", [&](const std::string& v) { cfg.out = v; }},
        {"color_out", [&](const std::string& v) { cfg.color_out = v; }},
        {"csv", [&](const std::string& v) { cfg.csv = v; }},
        {"region",
         [&](const std::string& v) {
             cfg.regions.clear();
             for (const auto& r : split(v, ';')) {
                 if (!r.empty()) cfg.regions.push_back(parse_region(r));
             }
         }},
        {"sweep_param", [&](const std::string& v) { cfg.sweep_param = v; }},
        {"sweep_values", [&](const std::string& v) { cfg.sweep_values = parse_values(v); }},
        {"max_motion",
         [&](const std::string& v) { cfg.max_motion = parse_real("max_motion", v); }},
        {"jobs", [&](const std::string& v) { cfg.jobs = parse_int("jobs", v); }},
    };
    for (const auto& [key, value] : entries) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ValidationError("unknown config key '" + key + "'");
        it->second(value);
    }
}

void cmd_flow(const RunConfig& cfg, std::ostream& out) {
    require_path(cfg.out, "out");
    const FlowRun run = compute_flow(cfg, cfg.params);
    write_flo(cfg.out, run.flow);
    if (!cfg.color_out.empty()) {
        write_png(cfg.color_out, flow_to_color(run.flow, cfg.max_motion));
    }
    const double energy = run.trace.warps.empty() ? 0.0 : run.trace.warps.back().energy_end;
    out << "wrote " << cfg.out.string() << " (" << run.flow.width() << "x" << run.flow.height()
        << ", " << run.trace.scales_used << " scales)\n";
    out << "time_seconds " << fmt(run.seconds) << "\n";
    out << "final_energy " << fmt(energy) << "\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
    require_path(cfg.flow, "flow");
    require_path(cfg.gt, "gt");
    const VectorField flow = read_flo(cfg.flow);
    const VectorField gt = read_flo(cfg.gt);
    require_same_shape(flow.x, gt.x, "eval");
    for (const auto& r : cfg.regions) r.validate(flow.width(), flow.height());

    std::vector<std::pair<std::string, RegionSpec>> rows;
    for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
        rows.emplace_back(region_label(i), cfg.regions[i]);
    }
    rows.emplace_back("overall", RegionSpec{0, 0, flow.width() - 1, flow.height() - 1});

    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    csv << "region,x0,y0,x1,y1,n_valid,aae_rad,aae_deg,aepe,sdae\n";
    for (const auto& [label, r] : rows) {
        const FlowMetrics m = aggregate_metrics(flow, gt, r);
        csv << label << ',' << r.x0 << ',' << r.y0 << ',' << r.x1 << ',' << r.y1 << ','
            << m.n_valid << ',' << fmt(m.aae) << ',' << fmt(m.aae_deg) << ',' << fmt(m.aepe)
            << ',' << fmt(m.sdae) << '\n';
        out << std::left << std::setw(10) << label << " AAE " << fmt(m.aae) << " rad ("
            << fmt(m.aae_deg) << " deg)  AEPE " << fmt(m.aepe) << "  SDAE " << fmt(m.sdae)
            << "  n=" << m.n_valid << "\n";
    }
    if (!cfg.csv.empty()) {
        auto f = open_csv(cfg.csv);
        f << csv.str();
    } else {
        out << csv.str();
    }
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    if (cfg.sweep_param != "alpha" && cfg.sweep_param != "lambda" &&
        cfg.sweep_param != "theta" && cfg.sweep_param != "lambda_sb") {
        throw ValidationError("sweep_param must be one of alpha, lambda, theta, lambda_sb");
    }
    if (cfg.sweep_values.empty()) throw ValidationError("sweep_values must be non-empty");
    if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");
    require_path(cfg.gt, "gt");

    std::vector<SolverParams> points;
    for (double value : cfg.sweep_values) {
        SolverParams p = cfg.params;
        set_param(p, cfg.sweep_param, value);
        p.validate();
        points.push_back(p);
    }
    const VectorField gt = read_flo(cfg.gt);
    for (const auto& r : cfg.regions) r.validate(gt.width(), gt.height());
    std::vector<std::pair<std::string, RegionSpec>> regions;
    for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
        regions.emplace_back(region_label(i), cfg.regions[i]);
    }
    if (regions.empty()) {
        regions.emplace_back("overall", RegionSpec{0, 0, gt.width() - 1, gt.height() - 1});
    }

    // Sweep points run on up to `jobs` threads; rows are emitted in sweep order.
    std::vector<FlowRun> runs(points.size());
    std::vector<std::exception_ptr> failures(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                runs[i] = compute_flow(cfg, points[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), points.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    csv << "sweep_param,value,region,x0,y0,x1,y1,n_valid,aae_rad,aae_deg,aepe,sdae,seconds,"
           "energy_descent"
        << param_header() << '\n';
    for (std::size_t i = 0; i < points.size(); ++i) {
        require_same_shape(runs[i].flow.x, gt.x, "sweep");
        const VectorField stored = as_stored(runs[i].flow);
        const bool descent = energy_descends(runs[i].trace);
        for (const auto& [label, r] : regions) {
            const FlowMetrics m = aggregate_metrics(stored, gt, r);
            csv << cfg.sweep_param << ',' << fmt_exact(cfg.sweep_values[i]) << ',' << label << ','
                << r.x0 << ',' << r.y0 << ',' << r.x1 << ',' << r.y1 << ',' << m.n_valid << ','
                << fmt(m.aae) << ',' << fmt(m.aae_deg) << ',' << fmt(m.aepe) << ','
                << fmt(m.sdae) << ',' << fmt(runs[i].seconds) << ',' << (descent ? 1 : 0)
                << param_row(points[i]) << '\n';
        }
        out << cfg.sweep_param << "=" << fmt(cfg.sweep_values[i]) << " done in "
            << fmt(runs[i].seconds) << " s\n";
    }
    if (!cfg.csv.empty()) {
        auto f = open_csv(cfg.csv);
        f << csv.str();
    } else {
        out << csv.str();
    }
}

void cmd_viz(const RunConfig& cfg, std::ostream& out) {
    require_path(cfg.flow, "flow");
    require_path(cfg.out, "out");
    if (cfg.max_motion && !(*cfg.max_motion > 0.0)) {
        throw ValidationError("max_motion must be > 0");
    }
    const VectorField flow = read_flo(cfg.flow);
    write_png(cfg.out, flow_to_color(flow, cfg.max_motion));
    out << "wrote " << cfg.out.string() << "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        // Config file first, so that flags given on the command line win.
        for (int i = 1; i < argc; ++i) {
            const std::string a = argv[i];
            if (a == "--config" && i + 1 < argc) {
                apply_config(read_config_file(argv[i + 1]), cfg);
            } else if (a.rfind("--config=", 0) == 0) {
                apply_config(read_config_file(a.substr(9)), cfg);
            }
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }

    CLI::App app{"Dense optical flow with TV-L1 / fractional-order split Bregman"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> region_args;
    std::string values_arg;
    double max_motion = 0.0;
    std::string frame0, frame1, gt, flow, outp, color, csv;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key=value config file");
        sub->add_option("--region", region_args, "x0,y0,x1,y1 (repeatable)");
        sub->add_option("--csv", csv, "CSV output path");
    };
    auto add_solver = [&](CLI::App* sub) {
        SolverParams& p = cfg.params;
        sub->add_option("--frame0", frame0, "first frame (PGM/PNG)");
        sub->add_option("--frame1", frame1, "second frame (PGM/PNG)");
        sub->add_option("--lambda", p.lambda, "data attachment weight");
        sub->add_option("--theta", p.theta, "tightness");
        sub->add_option("--epsilon", p.epsilon, "stopping threshold");
        sub->add_option("--eta", p.eta, "pyramid zoom factor");
        sub->add_option("--n_scales", p.n_scales, "number of scales");
        sub->add_option("--n_warps", p.n_warps, "warps per scale");
        sub->add_option("--n_maxiter", p.n_maxiter, "alternations per warp");
        sub->add_option("--lambda_sb", p.lambda_sb, "split Bregman penalty");
        sub->add_option("--alpha", p.alpha, "fractional order in [0,2]");
        sub->add_option("--inner_tol", p.inner_tol, "split Bregman tolerance");
        sub->add_option("--pad", p.pad, "Dirichlet padding (fractional path)");
        sub->add_option("--bregman_max_passes", p.bregman_max_passes, "split Bregman pass cap");
        sub->add_option("--gs_sweeps", p.gs_sweeps, "Gauss-Seidel sweeps per pass");
    };

    CLI::App* flow_cmd = app.add_subcommand("flow", "estimate the flow between two frames");
    add_common(flow_cmd);
    add_solver(flow_cmd);
    flow_cmd->add_option("--out", outp, ".flo output");
    flow_cmd->add_option("--color_out", color, "optional color-coded PNG");
    flow_cmd->add_option("--max_motion", max_motion, "color normalization (pixels)");

    CLI::App* eval_cmd = app.add_subcommand("eval", "compare a flow with ground truth");
    add_common(eval_cmd);
    eval_cmd->add_option("--flow", flow, "estimated .flo");
    eval_cmd->add_option("--gt", gt, "ground-truth .flo");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "evaluate over a parameter sweep");
    add_common(sweep_cmd);
    add_solver(sweep_cmd);
    sweep_cmd->add_option("--gt", gt, "ground-truth .flo");
    sweep_cmd->add_option("--sweep_param", cfg.sweep_param, "alpha|lambda|theta|lambda_sb");
    sweep_cmd->add_option("--sweep_values", values_arg, "comma-separated values");
    sweep_cmd->add_option("--jobs", cfg.jobs, "parallel sweep points");

    CLI::App* viz_cmd = app.add_subcommand("viz", "render a .flo as a color-coded PNG");
    viz_cmd->add_option("--config", config_path, "flat key=value config file");
    viz_cmd->add_option("--flow", flow, "input .flo");
    viz_cmd->add_option("--out", outp, "output PNG");
    viz_cmd->add_option("--max_motion", max_motion, "color normalization (pixels)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        auto apply_path = [](const std::string& v, std::filesystem::path& dst) {
            if (!v.empty()) dst = v;
        };
        apply_path(frame0, cfg.frame0);
        apply_path(frame1, cfg.frame1);
        apply_path(gt, cfg.gt);
        apply_path(flow, cfg.flow);
        apply_path(outp, cfg.out);
        apply_path(color, cfg.color_out);
        apply_path(csv, cfg.csv);
        if (!region_args.empty()) {
            cfg.regions.clear();
            for (const auto& r : region_args) cfg.regions.push_back(parse_region(r));
        }
        if (!values_arg.empty()) cfg.sweep_values = parse_values(values_arg);
        for (CLI::App* sub : {flow_cmd, viz_cmd}) {
            if (sub->parsed() && sub->count("--max_motion") > 0) cfg.max_motion = max_motion;
        }

        if (flow_cmd->parsed()) cmd_flow(cfg, out);
        else if (eval_cmd->parsed()) cmd_eval(cfg, out);
        else if (sweep_cmd->parsed()) cmd_sweep(cfg, out);
        else if (viz_cmd->parsed()) cmd_viz(cfg, out);
        return kOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace fracflow::cli
