#include <pcnet/analytic.hpp>
#include <pcnet/csv.hpp>
#include <pcnet/disorder.hpp>
#include <pcnet/ensemble.hpp>
#include <pcnet/measure.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#ifndef PCNET_VERSION
#define PCNET_VERSION "unknown"
#endif

using json = nlohmann::json;
using namespace pcnet;
namespace fs = std::filesystem;

namespace {

// ---- config schema ----

enum class Kind { number, integer, string, boolean, number_list, object };

const std::map<std::string, std::map<std::string, Kind>> &schema() {
    static const std::map<std::string, std::map<std::string, Kind>> s = {
        {"state", {{"preset", Kind::string}, {"z", Kind::number}, {"values", Kind::number_list}, {"x2", Kind::number}, {"y2", Kind::number}}},
        {"time", {{"t_max", Kind::number}, {"points_per_tJ", Kind::integer}}},
        {"maps", {{"variant", Kind::string}}},
        {"steady", {{"richardson", Kind::boolean}}},
        {"fluct", {{"mode", Kind::string}, {"onset", Kind::number}}},
        {"disorder",
         {{"B", Kind::number},
          {"Omega", Kind::number},
          {"sigma_h", Kind::number},
          {"sigma_omega", Kind::number},
          {"phi_dist", Kind::string},
          {"sigma_phi", Kind::number},
          {"a_phi", Kind::number},
          {"varphi", Kind::number},
          {"samples", Kind::integer},
          {"t_max", Kind::number},
          {"n_t", Kind::integer},
          {"env", Kind::number_list},
          {"which", Kind::integer}}},
        {"measure",
         {{"preset", Kind::string},
          {"c", Kind::number},
          {"mu_lambda3", Kind::number},
          {"mu_tau3", Kind::number},
          {"t_max_ref", Kind::number},
          {"tau_rule", Kind::string},
          {"kind", Kind::string},
          {"samples", Kind::integer}}},
        {"volume", {{"samples", Kind::integer}}},
        {"quench", {{"n_cl", Kind::integer}, {"window", Kind::number}, {"t_eval", Kind::number}}},
    };
    return s;
}

const char *kind_name(Kind k) {
    switch(k) {
        case Kind::number: return "a number";
        case Kind::integer: return "an integer";
        case Kind::string: return "a string";
        case Kind::boolean: return "a boolean";
        case Kind::number_list: return "an array of numbers";
        case Kind::object: return "an object";
    }
    return "";
}

bool has_kind(const json &v, Kind k) {
    switch(k) {
        case Kind::number: return v.is_number();
        case Kind::integer: return v.is_number_integer();
        case Kind::string: return v.is_string();
        case Kind::boolean: return v.is_boolean();
        case Kind::object: return v.is_object();
        case Kind::number_list:
            if(!v.is_array()) return false;
            for(const auto &e : v)
                if(!e.is_number()) return false;
            return true;
    }
    return false;
}

void check_config(const json &cfg) {
    if(!cfg.is_object()) throw config_error("config: expected a JSON object");
    for(auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string &k = it.key();
        if(k == "network") {
            network_from_json(*it, "config.network");
        } else if(k == "seed" || k == "threads") {
            if(!it->is_number_integer() || it->get<long long>() < 0) throw config_error("config." + k + ": expected a non-negative integer");
        } else if(k == "outdir") {
            if(!it->is_string()) throw config_error("config.outdir: expected a string");
        } else if(auto s = schema().find(k); s != schema().end()) {
            if(!it->is_object()) throw config_error("config." + k + ": expected an object");
            for(auto f = it->begin(); f != it->end(); ++f) {
                auto d = s->second.find(f.key());
                if(d == s->second.end()) throw config_error("config." + k + "." + f.key() + ": unknown key");
                if(!has_kind(*f, d->second)) throw config_error("config." + k + "." + f.key() + ": expected " + kind_name(d->second));
            }
        } else {
            throw config_error("config." + k + ": unknown key");
        }
    }
}

template <class T> T get_or(const json &cfg, const std::string &sec, const std::string &key, T def) {
    if(cfg.contains(sec) && cfg[sec].contains(key)) return cfg[sec][key].get<T>();
    return def;
}

bool has(const json &cfg, const std::string &sec, const std::string &key) { return cfg.contains(sec) && cfg[sec].contains(key); }

// ---- flags ----

struct Flag {
    std::string name, section, key;
    Kind kind;
    std::string help;
};

struct Parsed {
    std::map<std::string, std::string> values;
};

void add_flags(CLI::App *app, const std::vector<Flag> &flags, Parsed &p) {
    for(const auto &f : flags) app->add_option_function<std::string>("--" + f.name, [&p, f](const std::string &v) { p.values[f.name] = v; }, f.help);
}

void apply_flags(json &cfg, const std::vector<Flag> &flags, const Parsed &p) {
    for(const auto &f : flags) {
        auto it = p.values.find(f.name);
        if(it == p.values.end()) continue;
        const std::string &v = it->second;
        json val;
        try {
            std::size_t pos = 0;
            switch(f.kind) {
                case Kind::number:
                    val = std::stod(v, &pos);
                    break;
                case Kind::integer:
                    val = std::stoll(v, &pos);
                    break;
                case Kind::string: val = v; pos = v.size(); break;
                case Kind::boolean:
                    if(v == "true" || v == "1") val = true;
                    else if(v == "false" || v == "0") val = false;
                    else throw std::invalid_argument("bool");
                    pos = v.size();
                    break;
                default: throw std::invalid_argument("kind");
            }
            if(pos != v.size()) throw std::invalid_argument("trailing");
        } catch(const std::exception &) {
            throw config_error("--" + f.name + ": expected " + kind_name(f.kind) + ", got '" + v + "'");
        }
        if(f.section.empty()) cfg[f.key] = val;
        else cfg[f.section][f.key] = val;
    }
}

std::vector<Flag> common_flags() {
    return {{"outdir", "", "outdir", Kind::string, "output root directory"},
            {"seed", "", "seed", Kind::integer, "random seed"},
            {"threads", "", "threads", Kind::integer, "worker threads"}};
}

std::vector<Flag> network_flags() {
    return {{"topology", "network", "topology", Kind::string, "ring | complete | xx_pairs | quench"},
            {"n", "network", "n", Kind::integer, "qubits per cluster"},
            {"h", "network", "h", Kind::number, "uniform field"},
            {"j-perp", "network", "j_perp", Kind::number, "XX coupling"},
            {"j-par", "network", "j_par", Kind::number, "ZZ coupling"},
            {"state", "state", "preset", Kind::string, "hierarchy | neel | uniform | custom"},
            {"z", "state", "z", Kind::number, "z for the uniform preset"},
            {"x2", "state", "x2", Kind::number, "x component of site 1"},
            {"y2", "state", "y2", Kind::number, "y component of site 1"},
            {"t-max", "time", "t_max", Kind::number, "horizon in units of t_J"},
            {"ppt", "time", "points_per_tJ", Kind::integer, "grid points per t_J"}};
}

std::vector<Flag> concat(std::vector<Flag> a, const std::vector<Flag> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// ---- resolution ----

NetworkSpec resolve_network(const json &cfg) {
    json net = cfg.contains("network") ? cfg["network"] : json::object();
    if(!net.contains("topology")) net["topology"] = net.value("n", 3) >= 3 ? "ring" : "complete";
    if(!net.contains("h")) net["h"] = generic_h(network_from_json(net, "config.network").j_perp);
    return network_from_json(net, "config.network");
}

ProductState resolve_state(const json &cfg, int n) {
    const std::string preset = get_or<std::string>(cfg, "state", "preset", "hierarchy");
    std::vector<double> z;
    if(preset == "hierarchy") z = hierarchy_state(n);
    else if(preset == "neel") z = neel_state(n);
    else if(preset == "uniform") z = uniform_state(n, get_or<double>(cfg, "state", "z", 0.0));
    else if(preset == "custom") {
        if(!has(cfg, "state", "values")) throw config_error("config.state.values: required for the custom preset");
        z = cfg["state"]["values"].get<std::vector<double>>();
        if(int(z.size()) != n) throw config_error("config.state.values: expected " + std::to_string(n) + " entries");
    } else throw config_error("config.state.preset: unknown preset '" + preset + "'");
    ProductState s = diagonal_state(z);
    if(has(cfg, "state", "x2") || has(cfg, "state", "y2")) {
        if(n < 2) throw config_error("config.state.x2: needs at least 2 sites");
        s[1].x = get_or<double>(cfg, "state", "x2", 0.0);
        s[1].y = get_or<double>(cfg, "state", "y2", 0.0);
    }
    for(int i = 0; i < n; ++i)
        if(s[i].norm() > 1 + 1e-12) throw config_error("config.state: Bloch vector of site " + std::to_string(i) + " has norm > 1");
    return s;
}

std::vector<double> z_of(const ProductState &s) {
    std::vector<double> z;
    for(const auto &b : s) z.push_back(b.z);
    return z;
}

// ---- output ----

struct Run {
    std::string command;
    fs::path dir;
    json config;
    json diagnostics = json::object();
    json resolved = json::object();
    std::uint64_t seed = 1;
    int threads = 1;
};

std::string timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path current_run_dir;

void discard_empty_run() {
    std::error_code ec;
    if(!current_run_dir.empty() && fs::is_empty(current_run_dir, ec)) fs::remove(current_run_dir, ec);
}

Run open_run(const std::string &command, const json &cfg) {
    Run r;
    r.command = command;
    r.config = cfg;
    r.seed = cfg.value("seed", 1ULL);
    r.threads = cfg.value("threads", 1);
    set_threads(r.threads);
    fs::path root = cfg.value("outdir", std::string("runs"));
    const std::string base = command + "-" + timestamp();
    fs::path dir = root / base;
    for(int k = 2; fs::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
    fs::create_directories(dir);
    r.dir = dir;
    current_run_dir = dir;
    return r;
}

void write_json(const fs::path &p, const json &j) {
    std::ofstream f(p);
    if(!f) throw std::runtime_error("cannot write " + p.string());
    f << j.dump(2) << "\n";
}

void close_run(Run &r, const CsvTable &data) {
    data.write((r.dir / "data.csv").string());
    json m;
    m["command"] = r.command;
    m["version"] = PCNET_VERSION;
    m["timestamp"] = timestamp();
    m["seed"] = r.seed;
    m["threads"] = r.threads;
    m["config"] = r.config;
    m["resolved"] = r.resolved;
    write_json(r.dir / "manifest.json", m);
    write_json(r.dir / "diagnostics.json", r.diagnostics);
    std::cout << r.dir.string() << "\n";
}

json matrix_json(const TransferMatrix &t) {
    json a = json::array();
    for(int i = 0; i < 4; ++i) a.push_back({t(i, 0), t(i, 1), t(i, 2), t(i, 3)});
    return a;
}

std::string rational_str(const Rational &r) {
    return std::to_string(r.numerator()) + (r.denominator() == 1 ? "" : "/" + std::to_string(r.denominator()));
}

// CP test for an emitted map: the specialized inequalities when the map is phase covariant,
// the Choi spectrum otherwise.
bool map_is_cp(const PCParams &p, double choi_min) {
    if(p.residual <= 1e-8 && !pc_cp_inequalities(p.lambda1, p.lambda3, p.tau3, 1e-9)) return false;
    return choi_min >= -1e-9;
}

// ---- commands ----

int cmd_maps(const json &cfg) {
    Run run = open_run("maps", cfg);
    const NetworkSpec spec = resolve_network(cfg);
    if(spec.topology == Topology::quench) throw unsupported_error("maps: the quench topology is handled by the quench command");
    const ProductState state = resolve_state(cfg, spec.n);
    const std::vector<double> z = z_of(state);
    const TimeGrid grid = make_grid(spec.j_perp, get_or<double>(cfg, "time", "t_max", 10.0), get_or<int>(cfg, "time", "points_per_tJ", 40));
    const std::string vname = get_or<std::string>(cfg, "maps", "variant", "corrected");
    if(vname != "printed" && vname != "corrected") throw config_error("config.maps.variant: expected printed or corrected");
    const Variant variant = vname == "printed" ? Variant::printed : Variant::corrected;
    run.resolved["network"] = to_json(spec);
    run.resolved["z"] = z;
    run.resolved["variant"] = vname;

    const Propagator prop = propagator_of(spec);
    const bool diag = is_diagonal(state);
    const int n = spec.n;
    std::vector<std::vector<TransferMatrix>> maps(grid.steps + 1, std::vector<TransferMatrix>(n));
    if(diag) {
        DiagonalMapEngine eng(prop);
        parallel_for(std::size_t(grid.steps + 1), [&](std::size_t k) {
            auto ks = eng.kernels(grid.time(int(k)));
            for(int s = 0; s < n; ++s) maps[k][s] = eng.map(ks, s, z);
        });
    } else {
        parallel_for(std::size_t(grid.steps + 1), [&](std::size_t k) {
            const cmat u = prop.unitary(grid.time(int(k)));
            for(int s = 0; s < n; ++s) maps[k][s] = reduced_map_of_unitary(u, s, env_of(state, s));
        });
    }

    json warnings = json::array();
    std::optional<double> analytic_diff;
    if(diag && has_closed_form(spec.topology, n)) {
        try {
            double worst = 0;
            for(int k = 0; k <= grid.steps; ++k)
                for(int s = 0; s < n; ++s) {
                    const AnalyticMap a = analytic_map(spec, grid.time(k), s, z, variant);
                    const TransferMatrix &m = maps[k][s];
                    if(a.has_ab) worst = std::max(worst, (a.matrix(spec.h, grid.time(k)) - m).cwiseAbs().maxCoeff());
                    else worst = std::max({worst, std::abs(a.lambda3 - m(3, 3)), std::abs(a.tau3 - m(3, 0))});
                }
            analytic_diff = worst;
        } catch(const unsupported_error &e) {
            warnings.push_back(std::string("analytic cross-check skipped: ") + e.what());
        }
    } else if(spec.topology == Topology::xx_pairs) {
        double worst = 0;
        for(int k = 0; k <= grid.steps; ++k)
            for(int p = 0; p < n / 2; ++p) {
                const PairCoupling c = spec.pairs.empty() ? PairCoupling{spec.h, spec.h, spec.j_perp} : spec.pairs[p];
                const PairEig pe = PairEig::from_hamiltonian(c.h1, c.h2, c.j);
                const TransferMatrix a1 = xx_reduced_map(grid.time(k), pe, state[2 * p + 1], 1, variant);
                const TransferMatrix a2 = xx_reduced_map(grid.time(k), pe, state[2 * p], 2, variant);
                worst = std::max({worst, (a1 - maps[k][2 * p]).cwiseAbs().maxCoeff(), (a2 - maps[k][2 * p + 1]).cwiseAbs().maxCoeff()});
            }
        analytic_diff = worst;
    } else {
        warnings.push_back("no closed form for this configuration; numeric maps only");
    }

    CsvTable csv({"t_over_tJ", "site", "lambda1", "theta", "lambda3", "tau3", "residual", "choi_min"});
    const double tj = t_J(spec.j_perp);
    json violations = json::array();
    std::vector<double> max_res(n + 1, 0.0);
    std::vector<double> avg_l3;
    for(int k = 0; k <= grid.steps; ++k) {
        std::vector<TransferMatrix> row = maps[k];
        row.push_back(network_average(maps[k]));
        avg_l3.push_back(row.back()(3, 3));
        for(int s = 0; s <= n; ++s) {
            const PCParams p = fit_pc(row[s]);
            const double cm = choi_check(row[s]);
            max_res[s] = std::max(max_res[s], p.residual);
            const std::string site = s < n ? std::to_string(s) : "avg";
            if(!map_is_cp(p, cm) && violations.size() < 20) violations.push_back({{"t_over_tJ", grid.time(k) / tj}, {"site", site}, {"choi_min", cm}});
            csv.add({grid.time(k) / tj, site, p.lambda1, p.theta, p.lambda3, p.tau3, p.residual, cm});
        }
    }
    json pc = json::object();
    for(int s = 0; s <= n; ++s) pc[s < n ? std::to_string(s) : "avg"] = {{"max_residual", max_res[s]}, {"is_phase_covariant", max_res[s] <= 1e-8}};
    json crossings = json::array();
    for(int k = 1; k <= grid.steps; ++k)
        if((avg_l3[k - 1] > 0) != (avg_l3[k] > 0)) crossings.push_back(grid.time(k) / tj);
    run.diagnostics["phase_covariance"] = pc;
    run.diagnostics["avg_lambda3_zero_crossings"] = crossings;
    run.diagnostics["avg_lambda3_crosses_zero"] = !crossings.empty();
    if(analytic_diff) run.diagnostics["analytic_max_abs_diff"] = *analytic_diff;
    run.diagnostics["analytic_variant"] = vname;
    run.diagnostics["warnings"] = warnings;
    run.diagnostics["cp_violations"] = violations;
    close_run(run, csv);
    for(const auto &w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
    if(!violations.empty()) throw invariant_error("maps: complete-positivity violation beyond tolerance");
    return 0;
}

int cmd_steady(const json &cfg) {
    Run run = open_run("steady", cfg);
    const NetworkSpec spec = resolve_network(cfg);
    if(!has_steady_table(spec.topology, spec.n))
        throw unsupported_error("steady: no steady-channel table for " + to_string(spec.topology) + " with N = " + std::to_string(spec.n));
    const ProductState state = resolve_state(cfg, spec.n);
    if(!is_diagonal(state)) throw config_error("config.state: steady channels are defined for diagonal initial states");
    const std::vector<double> z = z_of(state);
    const double horizon = get_or<double>(cfg, "time", "t_max", 200.0);
    const int ppt = get_or<int>(cfg, "time", "points_per_tJ", 40);
    const TimeGrid grid = make_grid(spec.j_perp, horizon, ppt);
    const SteadyChannel ch = steady_channel(spec.n, spec.topology);
    run.resolved["network"] = to_json(spec);
    run.resolved["z"] = z;

    std::vector<double> cyc(z.begin() + 1, z.end()), swp = z;
    cyc.push_back(z[0]);
    std::swap(swp[0], swp[1]);
    auto series = network_series(spec, {z, cyc, swp}, grid);
    const AveragedRun main = averaged_run(series[0], grid, spec.j_perp);
    const double l_inf = ch.lambda3(z), t_inf = ch.tau3(z);

    CsvTable csv({"t_over_tJ", "lambda1_bar", "lambda3_bar", "tau3_bar", "delta_lambda3", "delta_tau3"});
    for(std::size_t k = 0; k < main.t_over_tJ.size(); ++k)
        csv.add({main.t_over_tJ[k], main.lambda1[k], main.lambda3[k], main.tau3[k], main.lambda3[k] - l_inf, main.tau3[k] - t_inf});

    const double l3 = main.lambda3.back(), t3 = main.tau3.back();
    const double bound = 5.0 / (spec.n * horizon);
    const AveragedRun rc = averaged_run(series[1], grid, spec.j_perp), rs = averaged_run(series[2], grid, spec.j_perp);
    const double dc = std::max(std::abs(rc.lambda3.back() - l3), std::abs(rc.tau3.back() - t3));
    const double ds = std::max(std::abs(rs.lambda3.back() - l3), std::abs(rs.tau3.back() - t3));
    json d;
    d["horizon_tJ"] = horizon;
    d["numeric"] = {{"lambda1_bar", main.lambda1.back()}, {"lambda3_bar", l3}, {"tau3_bar", t3}};
    d["printed"] = {{"lambda3", l_inf}, {"tau3", t_inf}};
    d["abs_diff"] = {{"lambda3", std::abs(l3 - l_inf)}, {"tau3", std::abs(t3 - t_inf)}};
    d["bound"] = bound;
    json lam = json::array(), tau = json::array();
    for(const auto &r : ch.lam) lam.push_back(rational_str(r));
    for(const auto &r : ch.tau) tau.push_back(rational_str(r));
    d["coefficients"] = {{"lambda3_eps_even", lam}, {"tau3_eps_odd", tau}, {"ring4_term", ch.ring4_term}};
    d["constraint_exact"] = ch.constraint_holds();
    const bool full_perm = spec.topology == Topology::complete || spec.n == 5;
    d["permutation"] = {{"cyclic_shift_diff", dc},
                        {"transposition_diff", ds},
                        {"expected_cyclic_invariant", true},
                        {"expected_transposition_invariant", full_perm},
                        {"cyclic_invariant", dc < bound},
                        {"transposition_invariant", ds < bound}};
    if(get_or<bool>(cfg, "steady", "richardson", true)) {
        const TimeGrid fine = make_grid(spec.j_perp, horizon, 2 * ppt);
        const AveragedRun rf = averaged_run(network_series(spec, z, fine), fine, spec.j_perp);
        d["richardson_lambda3_change"] = std::abs(rf.lambda3.back() - l3);
    }
    run.diagnostics = d;
    close_run(run, csv);
    if(std::abs(l3 - l_inf) > bound || std::abs(t3 - t_inf) > bound)
        throw invariant_error("steady: long-time average differs from the steady channel by more than the expected bound; increase the horizon");
    return 0;
}

int cmd_fluct(const json &cfg) {
    Run run = open_run("fluct", cfg);
    const NetworkSpec spec = resolve_network(cfg);
    if(!has_steady_table(spec.topology, spec.n))
        throw unsupported_error("fluct: no steady-channel table for " + to_string(spec.topology) + " with N = " + std::to_string(spec.n));
    const TimeGrid grid = make_grid(spec.j_perp, get_or<double>(cfg, "time", "t_max", 200.0), get_or<int>(cfg, "time", "points_per_tJ", 40));
    const SteadyChannel ch = steady_channel(spec.n, spec.topology);
    const std::string mode = get_or<std::string>(cfg, "fluct", "mode", "truncated");
    const double onset = get_or<double>(cfg, "fluct", "onset", 20.0);
    run.resolved["network"] = to_json(spec);
    run.resolved["mode"] = mode;
    FluctuationSeries f;
    if(mode == "truncated") {
        f = truncated_fluctuations(spec, ch, grid);
        if(onset != 20.0) {
            f = fluctuations(f.t_over_tJ, f.d_lambda, f.d_tau, 0.0, 0.0, spec.n, onset);
        }
    } else if(mode == "full") {
        const ProductState state = resolve_state(cfg, spec.n);
        const std::vector<double> z = z_of(state);
        run.resolved["z"] = z;
        const AveragedRun r = averaged_run(network_series(spec, z, grid), grid, spec.j_perp);
        f = fluctuations(r.t_over_tJ, r.lambda3, r.tau3, ch.lambda3(z), ch.tau3(z), spec.n, onset);
    } else throw config_error("config.fluct.mode: expected truncated or full");
    CsvTable csv({"t_over_tJ", "delta_lambda3", "delta_tau3"});
    for(std::size_t k = 0; k < f.t_over_tJ.size(); ++k) csv.add({f.t_over_tJ[k], f.d_lambda[k], f.d_tau[k]});
    run.diagnostics = {{"c_lambda3", f.c_lambda},
                       {"c_tau3", f.c_tau},
                       {"c_zeta", f.c_zeta()},
                       {"onset_tJ", onset},
                       {"lambda3_absolute", f.lambda_absolute},
                       {"tau3_absolute", f.tau_absolute},
                       {"c_zeta_order_one", f.c_zeta() >= 0.1 && f.c_zeta() <= 10}};
    close_run(run, csv);
    return 0;
}

DisorderSpec resolve_disorder(const json &cfg, json &warnings) {
    DisorderSpec d;
    d.B = get_or<double>(cfg, "disorder", "B", d.B);
    d.Omega = get_or<double>(cfg, "disorder", "Omega", d.Omega);
    d.sigma_h = get_or<double>(cfg, "disorder", "sigma_h", d.sigma_h);
    d.sigma_omega = get_or<double>(cfg, "disorder", "sigma_omega", d.sigma_omega);
    d.phi_dist = phi_dist_from_string(get_or<std::string>(cfg, "disorder", "phi_dist", "gaussian"));
    d.a_phi = get_or<double>(cfg, "disorder", "a_phi", d.a_phi);
    d.varphi = get_or<double>(cfg, "disorder", "varphi", d.varphi);
    if(!(d.varphi > 0)) throw config_error("config.disorder.varphi: must be positive");
    d.sigma_phi = get_or<double>(cfg, "disorder", "sigma_phi", pi / d.varphi);
    if(has(cfg, "disorder", "sigma_phi") && std::abs(d.sigma_phi - pi / d.varphi) > 1e-12)
        warnings.push_back("sigma_phi differs from pi/varphi; the printed closed forms describe sigma_phi = pi/varphi");
    validate(d);
    return d;
}

int cmd_disorder(const json &cfg) {
    Run run = open_run("disorder", cfg);
    json warnings = json::array();
    const DisorderSpec d = resolve_disorder(cfg, warnings);
    const auto n = get_or<long long>(cfg, "disorder", "samples", 10000);
    if(n < 100) throw config_error("config.disorder.samples: need at least 100");
    const double t_max = get_or<double>(cfg, "disorder", "t_max", 10.0);
    const int n_t = get_or<int>(cfg, "disorder", "n_t", 21);
    if(n_t < 2) throw config_error("config.disorder.n_t: need at least 2");
    const std::vector<double> ev = get_or<std::vector<double>>(cfg, "disorder", "env", {0.0, 0.0, 1.0});
    if(ev.size() != 3) throw config_error("config.disorder.env: expected [x, y, z]");
    const Bloch env{ev[0], ev[1], ev[2]};
    if(env.norm() > 1 + 1e-12) throw config_error("config.disorder.env: Bloch vector has norm > 1");
    const int which = get_or<int>(cfg, "disorder", "which", 1);
    if(which != 1 && which != 2) throw config_error("config.disorder.which: expected 1 or 2");
    run.resolved = {{"B", d.B},          {"Omega", d.Omega}, {"sigma_h", d.sigma_h}, {"sigma_omega", d.sigma_omega}, {"phi_dist", to_string(d.phi_dist)},
                    {"sigma_phi", d.sigma_phi}, {"a_phi", d.a_phi}, {"varphi", d.varphi}, {"samples", n}, {"env", ev}, {"which", which}};
    const bool closed = d.phi_dist == PhiDist::gaussian && env.x == 0.0 && env.y == 0.0 && which == 1;
    if(!closed) warnings.push_back("closed-form components unavailable for this configuration; Monte Carlo only");

    CsvTable csv({"t", "component", "mc_mean", "mc_stderr", "closed_form"});
    const char *lab = "0xyz";
    json disc = json::array();
    double worst_pc = 0;
    for(int k = 0; k < n_t; ++k) {
        const double t = t_max * k / (n_t - 1);
        const MCMap mc = mc_disorder_map(d, t, env, std::size_t(n), run.seed + std::uint64_t(k) * 0x9E3779B9ULL, which);
        TransferMatrix cf = TransferMatrix::Zero();
        if(closed) cf = closedform_disorder_map(d, t, env.z);
        for(int i = 0; i < 4; ++i)
            for(int j = 0; j < 4; ++j) {
                CsvCell c = closed ? CsvCell(cf(i, j)) : CsvCell(std::string());
                csv.add({t, std::string{lab[i], lab[j]}, mc.mean(i, j), mc.stderr_(i, j), c});
            }
        if(closed)
            for(auto &e : disorder_discrepancies(d, t, env.z, mc)) disc.push_back(e);
        for(auto [i, j] : pc_breaking_entries()) {
            const double se = mc.stderr_(i, j), m = std::abs(mc.mean(i, j));
            if(m > 0) worst_pc = std::max(worst_pc, se > 0 ? m / se : std::numeric_limits<double>::infinity());
        }
    }
    const MomentEstimate mom = mc_sin2_moment(d, std::size_t(std::max<long long>(n, 100000)), run.seed);
    json dj;
    dj["warnings"] = warnings;
    dj["closed_form_discrepancies"] = disc;
    dj["pc_breaking_max_abs_mean_over_stderr"] = worst_pc;
    dj["phase_covariant_on_average"] = worst_pc < 3;
    dj["sin2_phi_mc"] = {{"mean", mom.mean}, {"stderr", mom.stderr_}};
    if(d.phi_dist == PhiDist::trunc_tanh) {
        dj["max_tau3_analytic"] = max_tau3_trunc_tanh();
        dj["sin2_phi_quadrature"] = trunc_tanh_sin2_quadrature(d.a_phi);
        dj["max_tau3_headroom"] = mom.mean;
    } else {
        dj["sin2_phi_gaussian"] = gaussian_sin2(d.sigma_phi);
    }
    run.diagnostics = dj;
    close_run(run, csv);
    for(const auto &w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
    return 0;
}

int cmd_measure(const json &cfg) {
    Run run = open_run("measure", cfg);
    const std::string kind = get_or<std::string>(cfg, "measure", "kind", "trajectory");
    const auto samples = get_or<long long>(cfg, "measure", "samples", 10000);
    if(kind == "scatter_pc" || kind == "scatter_broken") {
        if(samples < 1) throw config_error("config.measure.samples: must be positive");
        CsvTable csv({"sample", "eigenvalue", "re", "im"});
        long real_pairs = 0;
        for(long long i = 0; i < samples; ++i) {
            Stream rng(run.seed, std::uint64_t(i));
            std::array<cplx, 4> ev;
            if(kind == "scatter_pc") ev = eigenvalues_pc(uniform_sample(rng));
            else {
                ev = eigenvalues_broken(broken_uniform_sample(rng));
                if(ev[1].imag() == 0.0) ++real_pairs;
            }
            for(int e = 0; e < 4; ++e) csv.add({(long long)i, (long long)e, ev[e].real(), ev[e].imag()});
        }
        run.resolved = {{"kind", kind}, {"samples", samples}};
        if(kind == "scatter_broken") run.diagnostics["real_mu_fraction"] = double(real_pairs) / double(samples);
        close_run(run, csv);
        return 0;
    }
    if(kind != "trajectory") throw config_error("config.measure.kind: expected trajectory, scatter_pc or scatter_broken");

    const NetworkSpec spec = resolve_network(cfg);
    const std::string preset = get_or<std::string>(cfg, "measure", "preset", "cc");
    MeasureSpec ms;
    ms.n = spec.n;
    ms.t_ref = t_J(spec.j_perp);
    ms.c_lambda1 = ms.c_lambda3 = ms.c_tau3 = get_or<double>(cfg, "measure", "c", 1.0);
    ms.t_max_ref = get_or<double>(cfg, "measure", "t_max_ref", 50.0);
    const std::string rule = get_or<std::string>(cfg, "measure", "tau_rule", "symmetric");
    if(rule == "symmetric") ms.tau_rule = TauRule::symmetric;
    else if(rule == "late_sign") ms.tau_rule = TauRule::late_sign;
    else throw config_error("config.measure.tau_rule: expected symmetric or late_sign");
    std::optional<std::vector<double>> z;
    if(preset == "cc" || preset == "ring") {
        const Topology top = preset == "cc" ? Topology::complete : Topology::ring;
        const SteadyChannel ch = steady_channel(spec.n, top);
        z = z_of(resolve_state(cfg, spec.n));
        ms.mu_lambda3 = ch.lambda3(*z);
        ms.mu_tau3 = ch.tau3(*z);
    } else if(preset == "custom") {
        if(!has(cfg, "measure", "mu_lambda3") || !has(cfg, "measure", "mu_tau3"))
            throw config_error("config.measure: the custom preset requires mu_lambda3 and mu_tau3");
        ms.mu_lambda3 = cfg["measure"]["mu_lambda3"].get<double>();
        ms.mu_tau3 = cfg["measure"]["mu_tau3"].get<double>();
    } else throw config_error("config.measure.preset: expected cc, ring or custom");
    if(!(ms.c_lambda3 > 0)) throw config_error("config.measure.c: must be positive");
    const std::vector<double> grid = measure_grid(ms);
    const auto traj = trajectory_sample(ms, grid, run.seed);
    run.resolved = {{"n", ms.n},           {"t_ref", ms.t_ref}, {"c", ms.c_lambda3}, {"mu_lambda3", ms.mu_lambda3},
                    {"mu_tau3", ms.mu_tau3}, {"t_max_ref", ms.t_max_ref}, {"tau_rule", rule}, {"preset", preset}};

    std::vector<double> l3bar(grid.size(), std::nan("")), t3bar(grid.size(), std::nan(""));
    if(z) {
        NetworkSpec net = spec;
        net.topology = preset == "cc" ? Topology::complete : Topology::ring;
        const TimeGrid g = make_grid(net.j_perp, ms.t_max_ref * ms.t_ref / t_J(net.j_perp), 40);
        const AveragedRun r = averaged_run(network_series(net, *z, g), g, net.j_perp);
        for(std::size_t k = 0; k < grid.size(); ++k) {
            const int idx = std::min(g.steps, int(std::llround(grid[k] / g.dt)));
            l3bar[k] = r.lambda3[idx];
            t3bar[k] = r.tau3[idx];
        }
    }
    CsvTable csv({"t_over_tref", "lambda3", "tau3", "lambda1", "sigma", "lambda3_bar", "tau3_bar"});
    json violations = json::array();
    long outside = 0, late = 0;
    for(std::size_t k = 0; k < traj.size(); ++k) {
        const auto &p = traj[k];
        const double sig = ms.sigma(ms.c_lambda3, p.t);
        if(!cp_contains(p.p.lambda1, p.p.tau3, p.p.lambda3)) violations.push_back({{"t_over_tref", p.t / ms.t_ref}});
        if(p.t > 10 * ms.t_ref) {
            ++late;
            if(std::abs(p.p.lambda3 - ms.mu_lambda3) > 3 * sig) ++outside;
        }
        csv.add({p.t / ms.t_ref, p.p.lambda3, p.p.tau3, p.p.lambda1, sig, l3bar[k], t3bar[k]});
    }
    run.diagnostics = {{"cp_violations", violations}, {"late_steps", late}, {"late_steps_outside_3sigma", outside}};
    close_run(run, csv);
    if(!violations.empty()) throw invariant_error("measure: emitted a triple outside the CP region");
    return 0;
}

int cmd_volume(const json &cfg) {
    Run run = open_run("volume", cfg);
    const auto n = get_or<long long>(cfg, "volume", "samples", 1000000);
    if(n < 1) throw config_error("config.volume.samples: must be positive");
    const VolumeEstimate v = volume_mc(std::size_t(n), run.seed);
    run.resolved = {{"samples", n}};
    const double exact_t = 16.0 / 9, exact_n = pi / 6, exact_p = 16.0 / 9 - pi / 6;
    CsvTable csv({"quantity", "estimate", "stderr", "exact", "n_stderr"});
    csv.add({std::string("total"), v.total, v.total_err, exact_t, std::abs(v.total - exact_t) / v.total_err});
    csv.add({std::string("negative_lambda3"), v.negative, v.negative_err, exact_n, std::abs(v.negative - exact_n) / v.negative_err});
    csv.add({std::string("positive_lambda3"), v.positive, v.positive_err, exact_p, std::abs(v.positive - exact_p) / v.positive_err});
    run.diagnostics = {{"total_within_3_stderr", std::abs(v.total - exact_t) <= 3 * v.total_err},
                       {"negative_within_3_stderr", std::abs(v.negative - exact_n) <= 3 * v.negative_err},
                       {"acceptance_rate", v.total / 8}};
    close_run(run, csv);
    return 0;
}

int cmd_quench(const json &cfg) {
    Run run = open_run("quench", cfg);
    const NetworkSpec spec = resolve_network(cfg);
    const int n_cl = get_or<int>(cfg, "quench", "n_cl", 400);
    const double window = get_or<double>(cfg, "quench", "window", 50.0);
    const double t_eval = get_or<double>(cfg, "quench", "t_eval", 100.0);
    if(!(window >= 0)) throw config_error("config.quench.window: must be non-negative");
    if(!(t_eval > 0)) throw config_error("config.quench.t_eval: must be positive");
    const std::vector<double> z = z_of(resolve_state(cfg, spec.n));
    const double tj = t_J(spec.j_perp);
    const QuenchResult r = quench_demo(spec, n_cl, window * tj, t_eval * tj, z, run.seed);
    run.resolved = {{"n", spec.n}, {"j_perp", spec.j_perp}, {"n_cl", n_cl}, {"window_tJ", window}, {"t_eval_tJ", t_eval}, {"z", z}};
    CsvTable csv({"entry", "cluster_average", "time_average", "abs_diff"});
    const char *lab = "0xyz";
    for(int i = 0; i < 4; ++i)
        for(int j = 0; j < 4; ++j)
            csv.add({std::string{lab[i], lab[j]}, r.cluster_average(i, j), r.time_average(i, j), std::abs(r.cluster_average(i, j) - r.time_average(i, j))});
    json ti = json::array();
    for(double t : r.t_i) ti.push_back(t / tj);
    run.diagnostics = {{"max_abs_diff", r.max_diff}, {"window_shorter_than_tJ", r.window_too_short}, {"t_i_over_tJ", ti}};
    close_run(run, csv);
    if(r.window_too_short) std::cerr << "warning: quench window shorter than t_J; the averaging assumption does not hold\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Phase-covariant dynamical maps of XXZ networks"};
    app.set_version_flag("--version", PCNET_VERSION);
    app.require_subcommand(1);
    std::string config_path;
    Parsed parsed;

    const std::vector<Flag> net = concat(common_flags(), network_flags());
    const std::map<std::string, std::vector<Flag>> flags = {
        {"maps", concat(net, {{"variant", "maps", "variant", Kind::string, "closed-form variant: printed | corrected"}})},
        {"steady", concat(net, {{"richardson", "steady", "richardson", Kind::boolean, "repeat at half step"}})},
        {"fluct", concat(net, {{"mode", "fluct", "mode", Kind::string, "truncated | full"}, {"onset", "fluct", "onset", Kind::number, "tail onset in t_J"}})},
        {"disorder", concat(common_flags(), {{"B", "disorder", "B", Kind::number, "mean field"},
                                             {"Omega", "disorder", "Omega", Kind::number, "mean splitting"},
                                             {"sigma-h", "disorder", "sigma_h", Kind::number, "field spread"},
                                             {"sigma-omega", "disorder", "sigma_omega", Kind::number, "splitting spread"},
                                             {"phi-dist", "disorder", "phi_dist", Kind::string, "gaussian | trunc_tanh"},
                                             {"sigma-phi", "disorder", "sigma_phi", Kind::number, "Gaussian phi width"},
                                             {"a-phi", "disorder", "a_phi", Kind::number, "trunc_tanh steepness"},
                                             {"varphi", "disorder", "varphi", Kind::number, "width symbol of the closed forms"},
                                             {"samples", "disorder", "samples", Kind::integer, "Monte Carlo samples per time"},
                                             {"t-max", "disorder", "t_max", Kind::number, "largest time"},
                                             {"t-points", "disorder", "n_t", Kind::integer, "number of times"},
                                             {"which", "disorder", "which", Kind::integer, "focal qubit 1 or 2"}})},
        {"measure", concat(net, {{"preset", "measure", "preset", Kind::string, "cc | ring | custom"},
                                 {"c", "measure", "c", Kind::number, "scale constant C"},
                                 {"mu-lambda3", "measure", "mu_lambda3", Kind::number, "custom mean of lambda3"},
                                 {"mu-tau3", "measure", "mu_tau3", Kind::number, "custom mean of tau3"},
                                 {"t-max-ref", "measure", "t_max_ref", Kind::number, "grid end in t_ref"},
                                 {"tau-rule", "measure", "tau_rule", Kind::string, "symmetric | late_sign"},
                                 {"kind", "measure", "kind", Kind::string, "trajectory | scatter_pc | scatter_broken"},
                                 {"samples", "measure", "samples", Kind::integer, "scatter samples"}})},
        {"volume", concat(common_flags(), {{"samples", "volume", "samples", Kind::integer, "Monte Carlo points"}})},
        {"quench", concat(net, {{"n-cl", "quench", "n_cl", Kind::integer, "number of clusters"},
                                {"window", "quench", "window", Kind::number, "quench-time window in t_J"},
                                {"t-eval", "quench", "t_eval", Kind::number, "evaluation time in t_J"}})},
    };
    const std::map<std::string, std::string> about = {
        {"maps", "per-site reduced maps over time"},
        {"steady", "long-time averages against the steady-channel tables"},
        {"fluct", "fluctuations about the steady channel"},
        {"disorder", "disorder-averaged pair maps"},
        {"measure", "sampling from phase-covariant measures"},
        {"volume", "volume of the CP region"},
        {"quench", "staggered-quench cluster average"},
    };
    std::map<std::string, CLI::App *> subs;
    for(const auto &[name, fl] : flags) {
        CLI::App *s = app.add_subcommand(name, about.at(name));
        s->set_help_flag("--help", "print this help message and exit");
        s->add_option("--config", config_path, "JSON config file");
        add_flags(s, fl, parsed);
        subs[name] = s;
    }

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string cmd;
    for(const auto &[name, s] : subs)
        if(s->parsed()) cmd = name;

    try {
        json cfg = json::object();
        if(!config_path.empty()) {
            std::ifstream f(config_path);
            if(!f) throw config_error("config: cannot open " + config_path);
            try {
                cfg = json::parse(f);
            } catch(const json::parse_error &e) {
                throw config_error(std::string("config: ") + e.what());
            }
            check_config(cfg);
        }
        apply_flags(cfg, flags.at(cmd), parsed);
        check_config(cfg);
        if(cmd == "maps") return cmd_maps(cfg);
        if(cmd == "steady") return cmd_steady(cfg);
        if(cmd == "fluct") return cmd_fluct(cfg);
        if(cmd == "disorder") return cmd_disorder(cfg);
        if(cmd == "measure") return cmd_measure(cfg);
        if(cmd == "volume") return cmd_volume(cfg);
        if(cmd == "quench") return cmd_quench(cfg);
    } catch(const config_error &e) {
        std::cerr << "config error: " << e.what() << "\n";
        discard_empty_run();
        return 2;
    } catch(const json::exception &e) {
        std::cerr << "config error: " << e.what() << "\n";
        discard_empty_run();
        return 2;
    } catch(const invariant_error &e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 3;
    } catch(const unsupported_error &e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        discard_empty_run();
        return 4;
    } catch(const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << "\n";
        discard_empty_run();
        return 2;
    } catch(const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        discard_empty_run();
        return 1;
    }
    return 0;
}
