// Batch front-end: worst-case tail bounds, detector synthesis, safe
// thresholds, benchmark generation and FAR/FDR evaluation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "CLI11.hpp"

#include "drfd/ambiguity.hpp"
#include "drfd/bounds.hpp"
#include "drfd/csv.hpp"
#include "drfd/design.hpp"
#include "drfd/sysmodel.hpp"
#include "drfd/verify.hpp"

namespace {

using drfd::AmbiguitySet;
using drfd::BoundResult;
using drfd::DesignResult;
using drfd::EllipsoidRegion;
using drfd::Matrix;
using drfd::SymMatrix;
using json = nlohmann::json;

std::string read_file(const std::string& path);

/// Applies a flat JSON config object {"option": value, ...} to a subcommand's
/// options. Command-line flags take precedence over file values.
void apply_json_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw drfd::InvalidConfig(std::string("invalid JSON config: ") + e.what());
    }
    if (!j.is_object()) throw drfd::InvalidConfig("config must be a JSON object");
    auto render = [](const json& v) {
        return v.is_string() ? v.get<std::string>() : v.dump();
    };
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr)
            throw drfd::InvalidConfig("unknown config key '" + key + "'");
        if (opt->count() > 0) continue;  // set on the command line
        if (value.is_array())
            for (const auto& e : value) opt->add_result(render(e));
        else
            opt->add_result(render(value));
        opt->run_callback();
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw drfd::IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw drfd::IoError("cannot write " + path);
    out << content;
}

double parse_alpha(const std::string& s) {
    if (s == "inf" || s == "Inf" || s == "INF") return drfd::kAlphaInf;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw drfd::ParseError("trailing characters in alpha");
        return v;
    } catch (const std::exception&) {
        throw drfd::ParseError("cannot parse alpha value '" + s + "'");
    }
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("DRFD_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw drfd::ParseError("DRFD_SEED must be an unsigned integer");
        }
    }
    return flag_seed;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

const char* branch_name(drfd::BoundBranch b) {
    switch (b) {
        case drfd::BoundBranch::SmallDeviation: return "small_deviation";
        case drfd::BoundBranch::LargeDeviation: return "large_deviation";
        case drfd::BoundBranch::Saturated: return "saturated";
    }
    return "unknown";
}

const char* scheme_name(drfd::Scheme s) {
    switch (s) {
        case drfd::Scheme::UnboundedMoment: return "dr-u";
        case drfd::Scheme::UnboundedUnimodal: return "dr-u-a";
        case drfd::Scheme::BoundedMoment: return "dr-b";
        case drfd::Scheme::BoundedUnimodal: return "dr-b-a";
    }
    return "unknown";
}

json bound_json(const BoundResult& r) {
    json j;
    j["value"] = r.value;
    j["branch"] = branch_name(r.branch);
    if (r.tau0_used) j["tau0"] = *r.tau0_used;
    if (r.certificate) {
        j["certificate"] = {{"iterations", r.certificate->iterations},
                            {"primal_residual", r.certificate->kkt.primal_residual},
                            {"dual_residual", r.certificate->kkt.dual_residual},
                            {"duality_gap", r.certificate->kkt.duality_gap}};
    }
    return j;
}

json design_json(const DesignResult& r) {
    json j;
    j["P"] = matrix_json(r.p);
    j["objective"] = r.objective;
    j["scheme"] = scheme_name(r.scheme);
    j["epsilon"] = r.epsilon;
    if (r.tau0) j["tau0"] = *r.tau0;
    j["certified_far"] = bound_json(r.certified_far);
    if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
    return j;
}

/// Minimal self-contained polyline chart; x positions follow sample order.
void write_svg(const std::string& path, const std::vector<double>& xs,
               const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const int width = 640, height = 400, margin = 50;
    double ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            if (!std::isfinite(y)) continue;
            if (first) {
                ymin = ymax = y;
                first = false;
            } else {
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    if (ymax <= ymin) ymax = ymin + 1.0;
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    const auto npts = xs.size();
    auto px = [&](size_t i) {
        return margin + (npts <= 1 ? 0.0
                                   : (width - 2.0 * margin) * static_cast<double>(i) /
                                         static_cast<double>(npts - 1));
    };
    auto py = [&](double y) {
        return height - margin - (height - 2.0 * margin) * (y - ymin) / (ymax - ymin);
    };
    int ci = 0;
    for (const auto& [name, ys] : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << colors[ci % 5]
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < ys.size() && i < npts; ++i)
            if (std::isfinite(ys[i])) svg << px(i) << "," << py(ys[i]) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << width - margin + 4 << "\" y=\"" << margin + 14 * ci
            << "\" font-size=\"10\" fill=\"" << colors[ci % 5] << "\">" << name
            << "</text>\n";
        ++ci;
    }
    svg << "</svg>\n";
    write_output(path, svg.str());
}

struct AmbiguityOpts {
    std::string ambiguity_path;
    std::string s0_path;
    double gamma1 = 0.0;
    double gamma2 = 1.0;
    std::string alpha = "inf";
};

void add_ambiguity_options(CLI::App* sub, AmbiguityOpts& opts) {
    sub->add_option("--ambiguity", opts.ambiguity_path,
                    "ambiguity set JSON file (overrides --S0/--gamma*/--alpha)");
    sub->add_option("--S0", opts.s0_path, "covariance matrix CSV");
    sub->add_option("--gamma1", opts.gamma1, "mean uncertainty radius");
    sub->add_option("--gamma2", opts.gamma2, "covariance inflation factor");
    sub->add_option("--alpha", opts.alpha, "unimodality degree (number or 'inf')");
}

AmbiguitySet load_ambiguity(const AmbiguityOpts& opts) {
    if (!opts.ambiguity_path.empty())
        return drfd::ambiguity_from_json(read_file(opts.ambiguity_path));
    if (opts.s0_path.empty())
        throw drfd::InvalidInput("either --ambiguity or --S0 is required");
    SymMatrix s0{drfd::load_matrix_csv(opts.s0_path)};
    return AmbiguitySet(std::move(s0), opts.gamma1, opts.gamma2,
                        parse_alpha(opts.alpha));
}

AmbiguitySet with_alpha(const AmbiguitySet& amb, double alpha, bool keep_support) {
    return AmbiguitySet(amb.s0(), amb.gamma1(), amb.gamma2(), alpha,
                        keep_support ? amb.support() : drfd::SupportSet{});
}

std::vector<double> parse_log_range(const std::string& spec, int default_count) {
    // "a:b" or "a:b:count", log-spaced.
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() < 2 || parts.size() > 3)
        throw drfd::ParseError("range must be 'first:last[:count]'");
    double a, b;
    int count = default_count;
    try {
        a = std::stod(parts[0]);
        b = std::stod(parts[1]);
        if (parts.size() == 3) count = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw drfd::ParseError("cannot parse range '" + spec + "'");
    }
    if (!(a > 0.0 && b > a) || count < 2)
        throw drfd::ParseError("range must satisfy 0 < first < last, count >= 2");
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(a * std::pow(b / a, static_cast<double>(i) / (count - 1)));
    return out;
}

std::vector<double> parse_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw drfd::ParseError("cannot parse list entry '" + tok + "'");
        }
    }
    if (out.empty()) throw drfd::ParseError("empty value list");
    return out;
}

std::string format_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    char buf[64];
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << buf << (i + 1 < row.size() ? "," : "\n");
        }
    }
    return out.str();
}

// ---------------------------------------------------------------- bound ----

struct BoundOpts {
    AmbiguityOpts amb;
    std::string m_path;
    double tau0 = 0.0;
    std::string out;
    std::string sweep;
    std::string alphas = "1:1024";
    std::string svg;
};

void run_bound(const BoundOpts& o) {
    AmbiguitySet amb = load_ambiguity(o.amb);
    EllipsoidRegion region{SymMatrix{drfd::load_matrix_csv(o.m_path)}};

    if (o.sweep == "alpha") {
        std::vector<double> alphas = parse_log_range(o.alphas, 25);
        std::vector<std::vector<double>> rows;
        std::vector<double> bounds;
        for (double a : alphas) {
            AmbiguitySet amb_a = with_alpha(amb, a, /*keep_support=*/false);
            BoundResult r = drfd::gauss_bound(region, amb_a);
            rows.push_back({a, drfd::improvement_factor(a), r.value});
            bounds.push_back(r.value);
        }
        write_output(o.out, format_csv({"alpha", "c_alpha", "bound"}, rows));
        if (!o.svg.empty()) write_svg(o.svg, alphas, {{"bound", bounds}});
        return;
    }
    if (!o.sweep.empty())
        throw drfd::InvalidInput("unknown sweep kind '" + o.sweep + "'");

    std::optional<double> tau = o.tau0 > 0.0 ? std::optional<double>(o.tau0)
                                             : std::nullopt;
    BoundResult r;
    if (!amb.support().unbounded())
        r = drfd::bounded_gauss_bound(region, amb, tau);
    else if (amb.alpha_finite())
        r = tau ? drfd::gauss_bound_tau(region, amb, *tau)
                : drfd::gauss_bound(region, amb);
    else
        r = drfd::chebyshev_bound(region, amb);
    write_output(o.out, bound_json(r).dump(2));
}

// --------------------------------------------------------------- design ----

struct DesignOpts {
    std::string w_path, v_path;
    AmbiguityOpts amb;
    double epsilon = 0.05;
    std::string scheme = "dr-u-a";
    std::string metric = "rho1";
    int tau0_grid = 0;  ///< 0 = library default grid
    std::string out;
    std::string sweep;
    std::string epsilons = "0.01,0.02,0.05,0.1,0.2";
    std::string svg;
};

DesignResult run_scheme(const std::string& scheme, const std::string& metric,
                        const Matrix& w, const Matrix& v, const AmbiguitySet& amb,
                        double epsilon, int tau0_grid) {
    const bool rho1 = metric == "rho1";
    auto closed = [&](const AmbiguitySet& a) {
        return rho1 ? drfd::frobenius_design(w, v, a, epsilon)
                    : drfd::glrt_design(w, v, a, epsilon);
    };
    auto bounded = [&](const AmbiguitySet& a) {
        std::vector<double> grid;
        if (tau0_grid > 0 && a.alpha_finite()) {
            // Same centering rule as the library default, with a custom size:
            // log-spaced around the closed-form seed design's natural point.
            double center = 1.0 / std::sqrt(drfd::improvement_factor(a.alpha()));
            try {
                DesignResult seed =
                    rho1 ? drfd::frobenius_design(w, v, with_alpha(a, a.alpha(), false),
                                                  epsilon)
                         : drfd::glrt_design(w, v, with_alpha(a, a.alpha(), false),
                                             epsilon);
                EllipsoidRegion seed_region{SymMatrix::symmetrize(
                    w.transpose() * seed.p.transpose() * seed.p * w)};
                center = drfd::default_tau0(seed_region, a);
            } catch (const drfd::Error&) {
                // fall back to the support-free anchor 1/sqrt(c_alpha)
            }
            if (tau0_grid == 1) {
                grid.push_back(center);
            } else {
                for (int i = 0; i < tau0_grid; ++i)
                    grid.push_back(center * std::pow(10.0, (i - (tau0_grid - 1) / 2.0) *
                                                               2.0 / (tau0_grid - 1)));
            }
        }
        drfd::DetectabilityMetric dm{rho1 ? drfd::MetricKind::Frobenius
                                          : drfd::MetricKind::PseudoDet};
        return drfd::bounded_design(w, v, a, epsilon, dm, grid);
    };
    if (scheme == "dr-u") return closed(with_alpha(amb, drfd::kAlphaInf, false));
    if (scheme == "dr-u-a") {
        if (!amb.alpha_finite())
            throw drfd::InvalidInput("dr-u-a requires a finite alpha");
        return closed(with_alpha(amb, amb.alpha(), false));
    }
    if (scheme == "dr-b") return bounded(with_alpha(amb, drfd::kAlphaInf, true));
    if (scheme == "dr-b-a") {
        if (!amb.alpha_finite())
            throw drfd::InvalidInput("dr-b-a requires a finite alpha");
        return bounded(amb);
    }
    throw drfd::InvalidInput("unknown scheme '" + scheme + "'");
}

void run_design(const DesignOpts& o) {
    Matrix w = drfd::load_matrix_csv(o.w_path);
    Matrix v = drfd::load_matrix_csv(o.v_path);
    AmbiguitySet amb = load_ambiguity(o.amb);
    if (o.metric != "rho1" && o.metric != "rho2")
        throw drfd::InvalidInput("unknown metric '" + o.metric + "'");

    if (o.sweep == "epsilon") {
        const std::vector<std::string> schemes = {"dr-u", "dr-u-a", "dr-b", "dr-b-a"};
        std::vector<double> eps = parse_list(o.epsilons);
        std::vector<std::vector<double>> rows;
        std::vector<std::vector<double>> cols(schemes.size());
        for (double e : eps) {
            std::vector<double> row = {e};
            for (size_t si = 0; si < schemes.size(); ++si) {
                double obj = std::numeric_limits<double>::quiet_NaN();
                try {
                    obj = run_scheme(schemes[si], o.metric, w, v, amb, e, o.tau0_grid)
                              .objective;
                } catch (const drfd::Error&) {
                    // leave the cell as NaN when a scheme is inapplicable
                }
                row.push_back(obj);
                cols[si].push_back(obj);
            }
            rows.push_back(std::move(row));
        }
        write_output(o.out,
                     format_csv({"epsilon", "dr-u", "dr-u-a", "dr-b", "dr-b-a"}, rows));
        if (!o.svg.empty()) {
            std::vector<std::pair<std::string, std::vector<double>>> series;
            for (size_t si = 0; si < schemes.size(); ++si)
                series.emplace_back(schemes[si], cols[si]);
            write_svg(o.svg, eps, series);
        }
        return;
    }
    if (!o.sweep.empty())
        throw drfd::InvalidInput("unknown sweep kind '" + o.sweep + "'");

    DesignResult r = run_scheme(o.scheme, o.metric, w, v, amb, o.epsilon, o.tau0_grid);
    write_output(o.out, design_json(r).dump(2));
}

// ------------------------------------------------------------ threshold ----

struct ThresholdOpts {
    std::string m_path;
    AmbiguityOpts amb;
    double epsilon = 0.05;
    double tau0 = 0.0;
    std::string out;
};

void run_threshold(const ThresholdOpts& o) {
    AmbiguitySet amb = load_ambiguity(o.amb);
    SymMatrix m{drfd::load_matrix_csv(o.m_path)};
    std::optional<double> tau = o.tau0 > 0.0 ? std::optional<double>(o.tau0)
                                             : std::nullopt;
    drfd::ThresholdResult r = drfd::safe_threshold(m, amb, o.epsilon, tau);
    json j;
    j["j_th"] = r.j_th;
    if (r.tau0) j["tau0"] = *r.tau0;
    write_output(o.out, j.dump(2));
}

// ------------------------------------------------------------- simulate ----

struct SimulateOpts {
    drfd::BenchmarkConfig config;
    std::string out_dir;
};

void run_simulate(const SimulateOpts& o) {
    drfd::BenchmarkConfig cfg = o.config;
    cfg.seed = effective_seed(cfg.seed);
    drfd::Benchmark bench = drfd::three_tank_benchmark(cfg);
    const auto nr = bench.rm.n_r();

    drfd::Dataset train;
    train.columns.push_back("t");
    for (Eigen::Index i = 0; i < nr; ++i)
        train.columns.push_back("v" + std::to_string(i + 1));
    train.rows.resize(bench.train.rows(), nr + 1);
    for (Eigen::Index k = 0; k < bench.train.rows(); ++k) {
        train.rows(k, 0) = static_cast<double>(k);
        train.rows.block(k, 1, 1, nr) = bench.train.row(k);
    }
    drfd::save_dataset_csv(o.out_dir + "/train.csv", train);

    drfd::Dataset test;
    test.columns = train.columns;
    test.columns.push_back("label");
    test.rows.resize(bench.test.rows(), nr + 2);
    for (Eigen::Index k = 0; k < bench.test.rows(); ++k) {
        test.rows(k, 0) = static_cast<double>(k);
        test.rows.block(k, 1, 1, nr) = bench.test.row(k);
        test.rows(k, nr + 1) = bench.labels(k);
    }
    drfd::save_dataset_csv(o.out_dir + "/test.csv", test);

    json model;
    model["W"] = matrix_json(bench.rm.w);
    model["V"] = matrix_json(bench.rm.v);
    model["s"] = bench.rm.s;
    model["n_r"] = static_cast<int>(nr);
    model["dt"] = bench.sys.dt;
    model["seed"] = cfg.seed;
    model["disturbance_family"] = cfg.disturbance_family;
    if (!bench.rm.note.empty()) model["note"] = bench.rm.note;
    write_output(o.out_dir + "/model.json", model.dump(2));
}

// ----------------------------------------------------------------- eval ----

struct EvalOpts {
    std::string dataset_path;
    std::vector<std::string> designs;  ///< name=path_to_P.csv
    double j_th = 1.0;
    std::string out;
};

void run_eval(const EvalOpts& o) {
    drfd::Dataset ds = drfd::load_dataset_csv(o.dataset_path);
    int label_col = -1;
    std::vector<int> v_cols;
    for (size_t i = 0; i < ds.columns.size(); ++i) {
        if (ds.columns[i] == "label")
            label_col = static_cast<int>(i);
        else if (ds.columns[i] != "t")
            v_cols.push_back(static_cast<int>(i));
    }
    if (label_col < 0) throw drfd::InvalidDataset("dataset has no 'label' column");
    Matrix v(ds.rows.rows(), static_cast<Eigen::Index>(v_cols.size()));
    for (size_t i = 0; i < v_cols.size(); ++i)
        v.col(static_cast<Eigen::Index>(i)) = ds.rows.col(v_cols[i]);
    Eigen::VectorXi labels(ds.rows.rows());
    for (Eigen::Index i = 0; i < ds.rows.rows(); ++i)
        labels(i) = ds.rows(i, label_col) != 0.0 ? 1 : 0;

    std::vector<std::string> header = {"metric"};
    std::vector<double> fars, fdrs;
    for (const auto& spec : o.designs) {
        const auto pos = spec.find('=');
        if (pos == std::string::npos)
            throw drfd::InvalidInput("--design expects name=path, got '" + spec + "'");
        header.push_back(spec.substr(0, pos));
        Matrix p = drfd::load_matrix_csv(spec.substr(pos + 1));
        drfd::FarFdr ff = drfd::evaluate_far_fdr(p, v, labels, o.j_th);
        fars.push_back(ff.far);
        fdrs.push_back(ff.fdr);
    }
    std::ostringstream out;
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    char buf[64];
    out << "FAR";
    for (double x : fars) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        out << "," << buf;
    }
    out << "\nFDR";
    for (double x : fdrs) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        out << "," << buf;
    }
    out << "\n";
    write_output(o.out, out.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust quadratic fault detection toolkit"};
    app.require_subcommand(1);

    BoundOpts bo;
    CLI::App* bound = app.add_subcommand("bound", "worst-case tail bound of a detector");
    std::string bound_config;
    bound->add_option("--config", bound_config, "JSON config file (flags win)");
    bound->add_option("--M", bo.m_path, "detector matrix CSV")->required();
    add_ambiguity_options(bound, bo.amb);
    bound->add_option("--tau0", bo.tau0, "linearization point (> 0)");
    bound->add_option("--out", bo.out, "output path (default stdout)");
    bound->add_option("--sweep", bo.sweep, "sweep kind: alpha");
    bound->add_option("--alphas", bo.alphas, "alpha range first:last[:count]");
    bound->add_option("--svg", bo.svg, "optional SVG chart path");
    bound->callback([&bo, bound, &bound_config] {
        apply_json_config(bound, bound_config);
        run_bound(bo);
    });

    DesignOpts dopts;
    CLI::App* design = app.add_subcommand("design", "synthesize a residual evaluator");
    std::string design_config;
    design->add_option("--config", design_config, "JSON config file (flags win)");
    design->add_option("--W", dopts.w_path, "disturbance map CSV")->required();
    design->add_option("--V", dopts.v_path, "fault map CSV")->required();
    add_ambiguity_options(design, dopts.amb);
    design->add_option("--epsilon", dopts.epsilon, "false alarm tolerance");
    design->add_option("--scheme", dopts.scheme, "dr-u | dr-u-a | dr-b | dr-b-a")
        ->check(CLI::IsMember({"dr-u", "dr-u-a", "dr-b", "dr-b-a"}));
    design->add_option("--metric", dopts.metric, "rho1 | rho2")
        ->check(CLI::IsMember({"rho1", "rho2"}));
    design->add_option("--tau0-grid", dopts.tau0_grid,
                       "grid size for the linearization search (0 = default)");
    design->add_option("--out", dopts.out, "output path (default stdout)");
    design->add_option("--sweep", dopts.sweep, "sweep kind: epsilon");
    design->add_option("--epsilons", dopts.epsilons, "comma-separated epsilon list");
    design->add_option("--svg", dopts.svg, "optional SVG chart path");
    design->callback([&dopts, design, &design_config] {
        apply_json_config(design, design_config);
        run_design(dopts);
    });

    ThresholdOpts topts;
    CLI::App* threshold = app.add_subcommand("threshold", "safe alarm threshold");
    std::string threshold_config;
    threshold->add_option("--config", threshold_config, "JSON config file (flags win)");
    threshold->add_option("--M", topts.m_path, "index matrix CSV")->required();
    add_ambiguity_options(threshold, topts.amb);
    threshold->add_option("--epsilon", topts.epsilon, "false alarm tolerance");
    threshold->add_option("--tau0", topts.tau0, "linearization point (> 0)");
    threshold->add_option("--out", topts.out, "output path (default stdout)");
    threshold->callback([&topts, threshold, &threshold_config] {
        apply_json_config(threshold, threshold_config);
        run_threshold(topts);
    });

    SimulateOpts sopts;
    CLI::App* simulate = app.add_subcommand("simulate", "generate the tank benchmark");
    std::string simulate_config;
    simulate->add_option("--config", simulate_config, "JSON config file (flags win)");
    simulate->add_option("--seed", sopts.config.seed, "RNG seed (DRFD_SEED overrides)");
    simulate->add_option("--n-train", sopts.config.n_train, "training samples");
    simulate->add_option("--n-test", sopts.config.n_test, "test samples");
    simulate->add_option("--fault-onset", sopts.config.fault_onset,
                         "fault onset index in the test segment");
    simulate->add_option("--fault-magnitude", sopts.config.fault_magnitude,
                         "leak fault magnitude");
    simulate->add_option("--family", sopts.config.disturbance_family,
                         "gaussian | gaussian_scale_mixture | uniform");
    simulate->add_option("--nr", sopts.config.n_r,
                         "reduced residual dimension (0 = full parity space)");
    simulate->add_option("--s", sopts.config.s, "parity stacking order");
    simulate->add_option("--out-dir", sopts.out_dir, "output directory")->required();
    simulate->callback([&sopts, simulate, &simulate_config] {
        apply_json_config(simulate, simulate_config);
        run_simulate(sopts);
    });

    EvalOpts eo;
    CLI::App* eval = app.add_subcommand("eval", "FAR/FDR table for designs");
    std::string eval_config;
    eval->add_option("--config", eval_config, "JSON config file (flags win)");
    eval->add_option("--dataset", eo.dataset_path, "labeled residual dataset CSV")
        ->required();
    eval->add_option("--design", eo.designs, "name=P.csv (repeatable)")->required();
    eval->add_option("--jth", eo.j_th, "alarm threshold");
    eval->add_option("--out", eo.out, "output path (default stdout)");
    eval->callback([&eo, eval, &eval_config] {
        apply_json_config(eval, eval_config);
        run_eval(eo);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const drfd::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const drfd::DesignFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const drfd::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drfd::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drfd::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drfd::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drfd::InvalidAmbiguity& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const drfd::Error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
