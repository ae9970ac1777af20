#include "vortexlab/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "vortexlab/io.hpp"
#include "vortexlab/mms.hpp"
#include "vortexlab/profiles.hpp"

namespace vlab {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i)
        os << (i ? "," : "") << std::setprecision(17) << v[i];
    return os.str();
}

template <class T>
std::vector<T> split_list(const std::string& s, const std::string& key)
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty())
            continue;
        std::istringstream is(item);
        T v;
        if (!(is >> v) || !is.eof())
            throw ConfigError("config: bad list entry '" + item + "' in " + key);
        out.push_back(v);
    }
    return out;
}

bool parse_bool(const std::string& s, const std::string& key)
{
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError("config: " + key + " must be true or false");
}

// Typed accessor that reports the offending key.
class Reader {
public:
    explicit Reader(const pt::ptree& t) : t_(t) {}

    template <class T>
    void get(const std::string& key, T& out)
    {
        auto v = t_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
        if (!v)
            return;
        std::istringstream is(*v);
        T x;
        if (!(is >> x) || !(is >> std::ws).eof())
            throw ConfigError("config: cannot parse " + key + " = '" + *v + "'");
        out = x;
    }
    void get_str(const std::string& key, std::string& out)
    {
        if (auto v = t_.get_optional<std::string>(key))
            out = *v;
    }
    void get_bool(const std::string& key, bool& out)
    {
        if (auto v = t_.get_optional<std::string>(key))
            out = parse_bool(*v, key);
    }
    std::optional<std::string> raw(const std::string& key) const
    {
        if (auto v = t_.get_optional<std::string>(key))
            return *v;
        return std::nullopt;
    }

private:
    const pt::ptree& t_;
};

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> s = {
        {"meta", {"version", "name", "seed"}},
        {"params",
         {"rho_bar", "u_bar1", "u_bar2", "mu", "lambda", "gamma", "eps", "t0", "Lambda", "C1"}},
        {"grid", {"d", "n_perp", "n3", "L"}},
        {"solver",
         {"dt", "cfl", "implicit_acoustics", "boundary", "sponge_width", "sponge_strength",
          "linear_tol", "poisson_tol", "density_floor"}},
        {"initial", {"family", "chi_amp", "zero_amp", "width", "center", "mode"}},
        {"run", {"T", "sample_dt", "checkpoint_every", "fit_lo", "fit_hi", "zero_mass_tol"}},
        {"sweep", {"eps_list", "refine_list", "converge_kind", "converge_T"}},
        {"output", {"dir", "threads", "deterministic"}},
    };
    return s;
}

const std::set<std::string>& families()
{
    static const std::set<std::string> f = {"nonzero-bump", "tangential-zeromode",
                                            "acoustic-pulse", "mixed"};
    return f;
}

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Field sum_fields(const Field& a, const Field& b, double sb = 1.0)
{
    Field r = a;
    for (std::size_t i = 0; i < r.values.size(); ++i)
        r.values[i] += sb * b.values[i];
    return r;
}

double trapezoid_time_average(const std::vector<double>& t, const std::vector<double>& v)
{
    if (t.size() < 2)
        return v.empty() ? 0.0 : v.front();
    double s = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
        s += 0.5 * (t[i] - t[i - 1]) * (v[i] + v[i - 1]);
    return s / (t.back() - t.front());
}

// Runs tasks on up to n threads; exceptions are rethrown after all finish.
void run_pool(std::vector<std::function<void()>>& tasks, int n)
{
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errs(tasks.size());
    auto worker = [&]() {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                tasks[i]();
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(n, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < nt; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    for (auto& e : errs)
        if (e)
            std::rethrow_exception(e);
}

PhysParams resolved_params(const ExperimentConfig& cfg, const InitialPerturbation& ip)
{
    PhysParams p = cfg.params;
    if (cfg.lambda_auto)
        p.Lambda = default_Lambda(p, initial_M0(ip), cfg.C1);
    return p;
}

nlohmann::json fit_json(const std::vector<FitResult>& fits)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : fits) {
        nlohmann::json j{{"quantity", f.quantity}, {"t_lo", f.t_lo}, {"t_hi", f.t_hi}};
        if (f.fit) {
            j["slope"] = f.fit->slope;
            j["intercept"] = f.fit->intercept;
            j["residual"] = f.fit->residual;
            j["stderr_slope"] = f.fit->stderr_slope;
            j["n"] = f.fit->n;
        } else {
            j["error"] = f.error;
        }
        a.push_back(j);
    }
    return a;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (version != kConfigVersion)
        throw ConfigError("config: unsupported version " + std::to_string(version));
    params.validate();
    grid.validate();
    solver.validate();
    if (!families().count(initial.family))
        throw ConfigError("config: unknown initial family '" + initial.family + "'");
    if (!(initial.width > 0.0))
        throw ConfigError("config: initial.width must be > 0");
    if (initial.mode < 1 || 2 * initial.mode >= grid.n_perp)
        throw ConfigError("config: initial.mode must be in [1, n_perp/2)");
    if (!(T > 0.0) || !(sample_dt > 0.0))
        throw ConfigError("config: run.T and run.sample_dt must be > 0");
    if (checkpoint_every < 0)
        throw ConfigError("config: run.checkpoint_every must be >= 0");
    if (!(fit_lo < fit_hi))
        throw ConfigError("config: run.fit_lo must be < run.fit_hi");
    if (!(zero_mass_tol > 0.0))
        throw ConfigError("config: run.zero_mass_tol must be > 0");
    for (double e : eps_list)
        if (!(e > 0.0))
            throw ConfigError("config: eps_list entries must be > 0");
    for (int n : refine_list)
        if (n < 16)
            throw ConfigError("config: refine_list entries must be >= 16");
    if (converge_kind != "layer" && converge_kind != "mms")
        throw ConfigError("config: converge_kind must be layer or mms");
    if (!(converge_T > 0.0))
        throw ConfigError("config: converge_T must be > 0");
    if (threads < 1)
        throw ConfigError("config: threads must be >= 1");
    if (!(C1 > 0.0))
        throw ConfigError("config: C1 must be > 0");
}

ExperimentConfig parse_config(const std::string& text)
{
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [sec, body] : tree) {
        auto it = schema().find(sec);
        if (it == schema().end())
            throw ConfigError("config: unknown section [" + sec + "]");
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + sec + "' outside a section");
        for (const auto& [key, v] : body)
            if (!it->second.count(key))
                throw ConfigError("config: unknown key " + sec + "." + key);
    }

    ExperimentConfig c;
    Reader r(tree);
    if (!r.raw("meta.version"))
        throw ConfigError("config: meta.version is required");
    r.get("meta.version", c.version);
    r.get_str("meta.name", c.name);
    r.get("meta.seed", c.seed);

    r.get("params.rho_bar", c.params.rho_bar);
    r.get("params.u_bar1", c.params.u_bar[0]);
    r.get("params.u_bar2", c.params.u_bar[1]);
    r.get("params.mu", c.params.mu);
    r.get("params.lambda", c.params.lambda);
    r.get("params.gamma", c.params.gamma);
    r.get("params.eps", c.params.eps);
    r.get("params.t0", c.params.t0);
    r.get("params.C1", c.C1);
    if (auto v = r.raw("params.Lambda")) {
        if (*v == "auto") {
            c.lambda_auto = true;
        } else {
            c.lambda_auto = false;
            r.get("params.Lambda", c.params.Lambda);
        }
    }

    r.get("grid.d", c.grid.d);
    r.get("grid.n_perp", c.grid.n_perp);
    r.get("grid.n3", c.grid.n3);
    r.get("grid.L", c.grid.L);

    r.get("solver.dt", c.solver.dt);
    r.get("solver.cfl", c.solver.cfl);
    r.get_bool("solver.implicit_acoustics", c.solver.implicit_acoustics);
    if (auto v = r.raw("solver.boundary")) {
        if (*v == "characteristic")
            c.solver.boundary = BoundaryMode::characteristic;
        else if (*v == "none")
            c.solver.boundary = BoundaryMode::none;
        else
            throw ConfigError("config: solver.boundary must be characteristic or none");
    }
    r.get("solver.sponge_width", c.solver.sponge_width);
    r.get("solver.sponge_strength", c.solver.sponge_strength);
    r.get("solver.linear_tol", c.solver.linear_tol);
    r.get("solver.poisson_tol", c.solver.poisson_tol);
    r.get("solver.density_floor", c.solver.density_floor);

    r.get_str("initial.family", c.initial.family);
    r.get("initial.chi_amp", c.initial.chi_amp);
    r.get("initial.zero_amp", c.initial.zero_amp);
    r.get("initial.width", c.initial.width);
    r.get("initial.center", c.initial.center);
    r.get("initial.mode", c.initial.mode);

    r.get("run.T", c.T);
    r.get("run.sample_dt", c.sample_dt);
    r.get("run.checkpoint_every", c.checkpoint_every);
    r.get("run.fit_lo", c.fit_lo);
    r.get("run.fit_hi", c.fit_hi);
    r.get("run.zero_mass_tol", c.zero_mass_tol);

    if (auto v = r.raw("sweep.eps_list"))
        c.eps_list = split_list<double>(*v, "sweep.eps_list");
    if (auto v = r.raw("sweep.refine_list"))
        c.refine_list = split_list<int>(*v, "sweep.refine_list");
    r.get_str("sweep.converge_kind", c.converge_kind);
    r.get("sweep.converge_T", c.converge_T);

    r.get_str("output.dir", c.out_dir);
    r.get("output.threads", c.threads);
    r.get_bool("output.deterministic", c.deterministic);

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c)
{
    std::ostringstream o;
    o << "[meta]\nversion = " << c.version << "\nname = " << c.name << "\nseed = " << c.seed
      << "\n\n[params]\nrho_bar = " << fmt(c.params.rho_bar)
      << "\nu_bar1 = " << fmt(c.params.u_bar[0]) << "\nu_bar2 = " << fmt(c.params.u_bar[1])
      << "\nmu = " << fmt(c.params.mu) << "\nlambda = " << fmt(c.params.lambda)
      << "\ngamma = " << fmt(c.params.gamma) << "\neps = " << fmt(c.params.eps)
      << "\nt0 = " << fmt(c.params.t0)
      << "\nLambda = " << (c.lambda_auto ? std::string("auto") : fmt(c.params.Lambda))
      << "\nC1 = " << fmt(c.C1) << "\n\n[grid]\nd = " << c.grid.d
      << "\nn_perp = " << c.grid.n_perp << "\nn3 = " << c.grid.n3 << "\nL = " << fmt(c.grid.L)
      << "\n\n[solver]\ndt = " << fmt(c.solver.dt) << "\ncfl = " << fmt(c.solver.cfl)
      << "\nimplicit_acoustics = " << (c.solver.implicit_acoustics ? "true" : "false")
      << "\nboundary = "
      << (c.solver.boundary == BoundaryMode::characteristic ? "characteristic" : "none")
      << "\nsponge_width = " << fmt(c.solver.sponge_width)
      << "\nsponge_strength = " << fmt(c.solver.sponge_strength)
      << "\nlinear_tol = " << fmt(c.solver.linear_tol)
      << "\npoisson_tol = " << fmt(c.solver.poisson_tol)
      << "\ndensity_floor = " << fmt(c.solver.density_floor)
      << "\n\n[initial]\nfamily = " << c.initial.family
      << "\nchi_amp = " << fmt(c.initial.chi_amp) << "\nzero_amp = " << fmt(c.initial.zero_amp)
      << "\nwidth = " << fmt(c.initial.width) << "\ncenter = " << fmt(c.initial.center)
      << "\nmode = " << c.initial.mode << "\n\n[run]\nT = " << fmt(c.T)
      << "\nsample_dt = " << fmt(c.sample_dt) << "\ncheckpoint_every = " << c.checkpoint_every
      << "\nfit_lo = " << fmt(c.fit_lo) << "\nfit_hi = " << fmt(c.fit_hi)
      << "\nzero_mass_tol = " << fmt(c.zero_mass_tol) << "\n\n[sweep]\neps_list = "
      << join(c.eps_list) << "\nrefine_list = " << join(c.refine_list)
      << "\nconverge_kind = " << c.converge_kind << "\nconverge_T = " << fmt(c.converge_T)
      << "\n\n[output]\ndir = " << c.out_dir << "\nthreads = " << c.threads
      << "\ndeterministic = " << (c.deterministic ? "true" : "false") << "\n";
    return o.str();
}

std::string config_hash(const ExperimentConfig& c)
{
    // output settings do not change results
    ExperimentConfig k = c;
    k.out_dir.clear();
    k.threads = 1;
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(to_ini(k));
    return os.str();
}

InitialPerturbation build_initial(const InitialSpec& s, const Grid& g, std::uint64_t seed)
{
    const int d = g.d;
    const double tp = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, tp);
    const double ph1 = seed ? U(rng) : 0.0;
    const double ph2 = seed ? U(rng) : 0.0;

    InitialPerturbation ip(g);
    for (int j = 0; j < g.n_nodes(); ++j) {
        const double z = (g.x3(j) - s.center) / s.width;
        const double gz = std::exp(-z * z);
        const double dgz = -2.0 * z * gz; // derivative in units of 1/width
        for (int k = 0; k < g.n_tan(); ++k) {
            double a1 = tp * s.mode * g.xt(k, 0);
            double a2 = d == 2 ? tp * s.mode * g.xt(k, 1) : 0.0;
            const double c1 = std::cos(a1 + ph1), s1 = std::sin(a1 + ph1);
            const double c2 = d == 2 ? std::cos(a2 + ph2) : 1.0;
            double b = 0.0, v3 = 0.0;
            std::array<double, 2> vt{};
            if (s.family == "nonzero-bump" || s.family == "mixed") {
                // modulated bump with a tangential mean so the center wave carries mass
                b += s.chi_amp * gz * c1 * c2;
                vt[0] += s.chi_amp * gz * (0.5 + s1);
                if (d == 2)
                    vt[1] += s.chi_amp * gz * (0.5 + std::sin(a2 + ph2));
                v3 += s.chi_amp * dgz * c1 * c2;
            }
            if (s.family == "tangential-zeromode" || s.family == "mixed") {
                vt[0] += s.zero_amp * gz;
                if (d == 2)
                    vt[1] += 0.5 * s.zero_amp * gz;
                if (s.family == "tangential-zeromode") {
                    b += s.chi_amp * gz * c1 * c2;
                    v3 += s.chi_amp * dgz * c1 * c2;
                }
            }
            if (s.family == "acoustic-pulse" || s.family == "mixed")
                b += s.chi_amp * gz;
            ip.b0.at(j, k) = b;
            for (int c = 0; c < d; ++c)
                ip.v0[c].at(j, k) = vt[c];
            ip.v0[d].at(j, k) = v3;
        }
    }
    return ip;
}

State initial_state(const InitialPerturbation& ip, const PhysParams& p)
{
    const Grid& g = ip.grid();
    const int d = g.d;
    State s(g);
    for (int j = 0; j < g.n_nodes(); ++j) {
        const auto uvs = vortex_layer_velocity(g.x3(j), 0.0, p, p.t0);
        for (int k = 0; k < g.n_tan(); ++k) {
            const double rho = p.rho_bar + p.eps * ip.b0.at(j, k);
            s.rho.at(j, k) = rho;
            for (int c = 0; c <= d; ++c) {
                const double base = c < d ? uvs[c] : 0.0;
                s.m[c].at(j, k) = rho * (base + ip.v0[c].at(j, k));
            }
        }
    }
    return s;
}

std::vector<FitResult> standard_fits(const std::vector<EnergyReport>& series, double t_lo,
                                     double t_hi)
{
    std::vector<double> t;
    std::map<std::string, std::vector<double>> q;
    for (const auto& r : series) {
        t.push_back(r.t);
        q["linf_bv"].push_back(r.linf_bv);
        q["md_h1"].push_back(r.md_h1);
        q["dZperp_inf"].push_back(r.dZperp_inf);
        q["E_star"].push_back(r.E_star);
    }
    std::vector<FitResult> out;
    for (const char* name : {"linf_bv", "md_h1", "dZperp_inf", "E_star"}) {
        FitResult f;
        f.quantity = name;
        f.t_lo = t_lo;
        f.t_hi = t_hi;
        try {
            f.fit = fit_decay(t, q[name], t_lo, t_hi);
        } catch (const Error& e) {
            f.error = e.what();
        }
        out.push_back(f);
    }
    return out;
}

void write_series_csv(const std::string& path, const std::vector<EnergyReport>& series)
{
    std::ofstream o(path);
    if (!o)
        throw ConfigError("cannot write " + path);
    const auto cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        o << (i ? "," : "") << cols[i];
    o << "\n" << std::setprecision(17);
    for (const auto& r : series) {
        const auto row = report_row(r);
        for (std::size_t i = 0; i < row.size(); ++i)
            o << (i ? "," : "") << row[i];
        o << "\n";
    }
}

RunRecord run_single(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto t_start = Clock::now();
    RunRecord rec;
    rec.config_hash = config_hash(cfg);
    rec.out_dir = cfg.out_dir;
    const bool persist = !cfg.out_dir.empty();
    fs::path dir(cfg.out_dir);
    if (persist)
        fs::create_directories(dir / "checkpoints");

    const Grid& g = cfg.grid;
    InitialPerturbation ip = build_initial(cfg.initial, g, cfg.seed);
    PhysParams p = resolved_params(cfg, ip);
    rec.Lambda = p.Lambda;
    rec.M0 = initial_M0(ip);
    rec.chi = initial_chi(ip);
    rec.alphas = compute_alphas(ip, p);
    AnsatzSpec spec = build_ansatz(rec.alphas, p, g.d);
    if (persist) {
        write_ansatz_record((dir / "ansatz.json").string(), spec);
        std::ofstream(dir / "config.ini") << to_ini(cfg);
    }

    State s = initial_state(ip, p);
    CompressibleSolver solver(g, p, cfg.solver);
    solver.initialize(s);
    rec.dt = solver.dt();

    RunningMonitors mon;
    AprioriMonitor apriori;
    const int n_samples = static_cast<int>(std::floor(cfg.T / cfg.sample_dt + 1e-9));
    auto checkpoint = [&](const State& st, const std::string& tag) {
        std::string path = (dir / "checkpoints" / ("ckpt_" + tag + ".bin")).string();
        save_checkpoint(path, st, p);
        rec.checkpoints.push_back(path);
        return path;
    };
    auto sample = [&]() {
        EnergyReport r = make_report(s, spec, mon, cfg.zero_mass_tol);
        apriori.feed(r);
        rec.zero_mass_violated = rec.zero_mass_violated || r.zero_mass_violated;
        rec.series.push_back(std::move(r));
    };

    sample();
    for (int i = 1; i <= n_samples; ++i) {
        State last = s;
        try {
            solver.advance_to(s, i * cfg.sample_dt);
        } catch (const NumericalError& e) {
            std::string path;
            if (persist) {
                path = checkpoint(last, "failure");
                write_series_csv((dir / "series.csv").string(), rec.series);
            }
            throw RunAborted(std::string(e.what()) + " at t = " + fmt(s.t), path);
        }
        sample();
        if (persist && cfg.checkpoint_every > 0 && i % cfg.checkpoint_every == 0) {
            char tag[16];
            std::snprintf(tag, sizeof tag, "%05d", i);
            checkpoint(s, tag);
        }
    }
    if (persist)
        checkpoint(s, "final");

    rec.fits = standard_fits(rec.series, cfg.fit_lo, cfg.fit_hi);
    rec.not_plateaued = apriori.not_plateaued();
    rec.nu2_final = mon.nu2;
    rec.M2_final = mon.M2;
    {
        const double t_mid = 0.5 * (rec.series.front().t + rec.series.back().t);
        double m2_mid = 0.0, m2 = 0.0;
        for (const auto& r : rec.series) {
            m2 = r.M2;
            if (r.t <= t_mid)
                m2_mid = m2;
        }
        rec.M2_growth_second_half = m2_mid > 0.0 ? m2 / m2_mid - 1.0 : 0.0;
    }
    rec.wall_seconds = seconds_since(t_start);

    if (persist) {
        rec.series_path = (dir / "series.csv").string();
        write_series_csv(rec.series_path, rec.series);
        nlohmann::json j;
        j["config_hash"] = rec.config_hash;
        j["config"] = to_ini(cfg);
        j["series"] = rec.series_path;
        j["checkpoints"] = rec.checkpoints;
        j["alphas"] = rec.alphas;
        j["Lambda"] = rec.Lambda;
        j["M0"] = rec.M0;
        j["chi"] = rec.chi;
        j["dt"] = rec.dt;
        j["fits"] = fit_json(rec.fits);
        j["monitor"] = {{"not_plateaued", rec.not_plateaued},
                        {"M2_growth_second_half", rec.M2_growth_second_half},
                        {"nu2", rec.nu2_final},
                        {"M2", rec.M2_final},
                        {"zero_mass_violated", rec.zero_mass_violated}};
        nlohmann::json bounds;
        for (const auto& [name, e] : apriori.entries())
            bounds[name] = e.max_ratio;
        j["monitor"]["max_bound_ratio"] = bounds;
        j["wall_seconds"] = rec.wall_seconds;
        j["deterministic"] = cfg.deterministic;
        std::ofstream(dir / "record.json") << j.dump(2) << "\n";
    }
    return rec;
}

SweepReport run_mach_sweep(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.eps_list.size() < 3)
        throw ConfigError("sweep: eps_list needs at least 3 values");
    for (std::size_t i = 1; i < cfg.eps_list.size(); ++i) {
        const double r0 = cfg.eps_list[1] / cfg.eps_list[0];
        const double r = cfg.eps_list[i] / cfg.eps_list[i - 1];
        if (std::abs(r - r0) > 1e-6 * std::abs(r0) || r == 1.0)
            throw ConfigError("sweep: eps_list must be geometric");
    }
    const auto t_start = Clock::now();
    SweepReport rep;
    const Grid& g = cfg.grid;
    const int d = g.d;
    InitialPerturbation ip = build_initial(cfg.initial, g, cfg.seed);
    const int n_samples = static_cast<int>(std::floor(cfg.T / cfg.sample_dt + 1e-9));

    // incompressible reference
    PhysParams p0 = resolved_params(cfg, ip);
    std::vector<std::vector<Field>> u_ref;
    {
        const auto t0 = Clock::now();
        IncState is(g);
        auto pv = leray_project(ip.v0, cfg.solver.poisson_tol);
        for (int j = 0; j < g.n_nodes(); ++j) {
            const auto uvs = vortex_layer_velocity(g.x3(j), 0.0, p0, p0.t0);
            for (int k = 0; k < g.n_tan(); ++k)
                for (int c = 0; c <= d; ++c)
                    is.u[c].at(j, k) = (c < d ? uvs[c] : 0.0) + pv[c].at(j, k);
        }
        IncompressibleSolver inc(g, p0, cfg.solver);
        inc.initialize(is);
        u_ref.push_back(is.u);
        for (int i = 1; i <= n_samples; ++i) {
            inc.advance_to(is, i * cfg.sample_dt);
            u_ref.push_back(is.u);
        }
        rep.inc_wall_seconds = seconds_since(t0);
    }

    rep.rows.resize(cfg.eps_list.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t e = 0; e < cfg.eps_list.size(); ++e)
        tasks.emplace_back([&, e]() {
            const auto t0 = Clock::now();
            PhysParams p = p0;
            p.eps = cfg.eps_list[e];
            State s = initial_state(ip, p);
            CompressibleSolver solver(g, p, cfg.solver);
            solver.initialize(s);
            std::vector<double> ts, q, dv, du;
            auto sample = [&](int i) {
                auto mm = mach_metrics(s, p);
                auto u = velocity(s);
                double du2 = 0.0;
                for (int c = 0; c <= d; ++c)
                    du2 += std::pow(l2_norm(sum_fields(u[c], u_ref[i][c], -1.0)), 2);
                ts.push_back(s.t);
                q.push_back(mm.q_norm);
                dv.push_back(mm.div_norm);
                du.push_back(std::sqrt(du2));
            };
            sample(0);
            for (int i = 1; i <= n_samples; ++i) {
                solver.advance_to(s, i * cfg.sample_dt);
                sample(i);
            }
            SweepRow& row = rep.rows[e];
            row.eps = p.eps;
            row.q_avg = trapezoid_time_average(ts, q);
            row.div_avg = trapezoid_time_average(ts, dv);
            row.du_avg = trapezoid_time_average(ts, du);
            row.wall_seconds = seconds_since(t0);
        });
    run_pool(tasks, cfg.threads);
    rep.total_wall_seconds = seconds_since(t_start);

    if (!cfg.out_dir.empty()) {
        fs::path dir(cfg.out_dir);
        fs::create_directories(dir);
        std::ofstream o(dir / "sweep.csv");
        o << "eps,q_avg,div_avg,du_avg,wall_seconds\n" << std::setprecision(17);
        for (const auto& r : rep.rows)
            o << r.eps << "," << r.q_avg << "," << r.div_avg << "," << r.du_avg << ","
              << r.wall_seconds << "\n";
        nlohmann::json j;
        j["config_hash"] = config_hash(cfg);
        j["config"] = to_ini(cfg);
        j["incompressible_wall_seconds"] = rep.inc_wall_seconds;
        j["total_wall_seconds"] = rep.total_wall_seconds;
        nlohmann::json red = nlohmann::json::array();
        for (std::size_t i = 1; i < rep.rows.size(); ++i)
            red.push_back({{"eps", rep.rows[i].eps},
                           {"q_factor", rep.rows[i].q_avg / rep.rows[i - 1].q_avg},
                           {"du_factor", rep.rows[i].du_avg / rep.rows[i - 1].du_avg},
                           {"div_factor", rep.rows[i].div_avg / rep.rows[i - 1].div_avg}});
        j["reduction_factors"] = red;
        std::ofstream(dir / "sweep.json") << j.dump(2) << "\n";
    }
    return rep;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.refine_list.size() < 3)
        throw ConfigError("converge: refine_list needs at least 3 values");
    std::vector<int> ns = cfg.refine_list;
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] != 2 * ns[i - 1])
            throw ConfigError("converge: refine_list must double n3 at every level");
    ConvergenceReport rep;
    rep.kind = cfg.converge_kind;

    PhysParams p = cfg.params;
    if (rep.kind == "mms")
        p.u_bar = {0.0, 0.0};
    ManufacturedSolution ms(p);

    auto grid_for = [&](int n3) {
        return make_grid(cfg.grid.d, cfg.grid.n_perp, n3, cfg.grid.L);
    };
    auto exact = [&](const Grid& g, double t) {
        return rep.kind == "mms" ? ms.exact_state(g, t) : background_state(g, p, t);
    };

    // dt halves with h3; the finest level takes the CFL step (or cfg dt)
    double dt_fine = cfg.solver.dt;
    {
        Grid gf = grid_for(ns.back());
        if (!(dt_fine > 0.0))
            dt_fine = cfl_dt(exact(gf, 0.0), cfg.solver, p);
    }
    const double T = cfg.converge_T;
    dt_fine = T / std::ceil(T / dt_fine);

    for (std::size_t i = 0; i < ns.size(); ++i) {
        const auto t0 = Clock::now();
        Grid g = grid_for(ns[i]);
        SolverConfig sc = cfg.solver;
        if (rep.kind == "mms")
            sc.forcing = ms.forcing(g);
        State s = exact(g, 0.0);
        CompressibleSolver solver(g, p, sc);
        solver.initialize(s);
        const double dt = dt_fine * std::pow(2.0, static_cast<double>(ns.size() - 1 - i));
        solver.set_dt(dt);
        solver.advance_to(s, T);
        State e = exact(g, T);
        double err = 0.0;
        for (std::size_t q = 0; q < s.rho.values.size(); ++q) {
            err = std::max(err, std::abs(s.rho.values[q] - e.rho.values[q]));
            for (int c = 0; c <= g.d; ++c)
                err = std::max(err, std::abs(s.m[c].values[q] - e.m[c].values[q]));
        }
        ConvergenceRow row;
        row.n3 = ns[i];
        row.dt = dt;
        row.error = err;
        row.wall_seconds = seconds_since(t0);
        if (i > 0)
            row.order = std::log2(rep.rows.back().error / err);
        rep.rows.push_back(row);
    }
    if (rep.rows.size() >= 3) {
        const double a = rep.rows[rep.rows.size() - 2].order, b = rep.rows.back().order;
        rep.pre_asymptotic = std::abs(a - b) > 0.2 * std::max(std::abs(a), std::abs(b));
    }

    if (!cfg.out_dir.empty()) {
        fs::path dir(cfg.out_dir);
        fs::create_directories(dir);
        std::ofstream o(dir / "convergence.csv");
        o << "n3,dt,error,order,wall_seconds\n" << std::setprecision(17);
        for (const auto& r : rep.rows)
            o << r.n3 << "," << r.dt << "," << r.error << "," << r.order << "," << r.wall_seconds
              << "\n";
        nlohmann::json j;
        j["config_hash"] = config_hash(cfg);
        j["kind"] = rep.kind;
        j["pre_asymptotic"] = rep.pre_asymptotic;
        std::ofstream(dir / "convergence.json") << j.dump(2) << "\n";
    }
    return rep;
}

std::vector<FitResult> report_from_series(const std::string& series_csv, double t_lo,
                                          double t_hi)
{
    std::ifstream in(series_csv);
    if (!in)
        throw ConfigError("report: cannot open " + series_csv);
    std::string line;
    std::getline(in, line);
    auto header = split_list<std::string>(line, "header");
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i)
        col[header[i]] = static_cast<int>(i);
    for (const char* need : {"t", "linf_bv", "md_h1", "dZperp_inf", "E_star"})
        if (!col.count(need))
            throw ConfigError(std::string("report: series lacks column ") + need);
    std::vector<EnergyReport> series;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto v = split_list<double>(line, "row");
        if (v.size() != header.size())
            throw ConfigError("report: ragged row in " + series_csv);
        EnergyReport r;
        r.t = v[col["t"]];
        r.linf_bv = v[col["linf_bv"]];
        r.md_h1 = v[col["md_h1"]];
        r.dZperp_inf = v[col["dZperp_inf"]];
        r.E_star = v[col["E_star"]];
        series.push_back(r);
    }
    return standard_fits(series, t_lo, t_hi);
}

} // namespace vlab
