// mswave: command-line driver for the two-speed wave lab.
//
//   mswave simulate|iterate|verify|sweep|regions|info [--config F] [--preset P]
//          [--out DIR] [--threads N] [--resume] [--set section.key=value ...]
//
// Exit codes: 0 ok, 2 usage/config, 3 numerical refusal, 4 regression violation.

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mswave/config.hpp"
#include "mswave/estimates.hpp"
#include "mswave/lifespan.hpp"
#include "mswave/system.hpp"
#include "mswave/trace_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mswave;

namespace {

enum Exit { ok = 0, generic = 1, usage = 2, refusal = 3, violation = 4 };

struct UsageError : Error {
    using Error::Error;
};

/// Rounded to 12 significant digits so summaries compare byte for byte
/// across compilers that disagree in the last ulp.
double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

json num(double v) { return std::isfinite(v) ? json(round12(v)) : json(nullptr); }
json opt_num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

// ---------------------------------------------------------------------------
// Output directory: one writer, flock'd, atomic renames.

class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        fd_ = ::open((dir_ / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0)
            throw UsageError("output directory is in use by another run: " + dir_.string());
        std::ifstream in(dir_ / "stages.json");
        if (in) {
            try {
                in >> stages_;
            } catch (const json::exception&) {
                stages_ = json::object();
            }
        }
        if (!stages_.is_object()) stages_ = json::object();
    }
    ~OutputDir() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    const fs::path& path() const { return dir_; }

    void write(const std::string& name, const std::string& content) {
        std::lock_guard lock(mu_);
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw Error("cannot write " + tmp.string());
            out << content;
        }
        fs::rename(tmp, dir_ / name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
    void write_trace(const std::string& name, const SpaceTimeTrace& tr, const json& prov) {
        std::lock_guard lock(mu_);
        mswave::write_trace(dir_ / name, tr, prov);
    }

    /// A stage is done if its recorded hash matches and its files exist.
    bool done(const std::string& stage, const std::string& hash) const {
        if (!stages_.contains(stage)) return false;
        const json& s = stages_[stage];
        if (s.value("hash", "") != hash) return false;
        for (const auto& f : s.value("files", json::array()))
            if (!fs::exists(dir_ / f.get<std::string>())) return false;
        return true;
    }
    void mark(const std::string& stage, const std::string& hash, const std::vector<std::string>& files) {
        stages_[stage] = {{"hash", hash}, {"files", files}, {"code_version", code_version}};
        write_json("stages.json", stages_);
    }

private:
    fs::path dir_;
    int fd_ = -1;
    std::mutex mu_;
    json stages_ = json::object();
};

// ---------------------------------------------------------------------------
// Shared config readers

struct Run {
    Config cfg;
    std::string command;
    std::optional<fs::path> out;
    unsigned threads = 1;
    bool resume = false;

    json provenance() const { return {{"code_version", code_version}, {"command", command}, {"config", cfg.to_json()}}; }
};

/// Uniform double in [0, 1) from the top 53 bits; same on every platform.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Data family from [data]; a nonzero `perturbation` rescales each of the four
/// profiles by 1 + a u, u uniform in [-1, 1) drawn from `seed`.
DataFamily family_from(const Config& c) {
    DataFamily f = data_family(c.str("data.family", "paper-bump"));
    const double a = c.num("data.perturbation", 0.0);
    if (a < 0.0 || a >= 1.0) throw ConfigurationError("data.perturbation must lie in [0, 1)");
    if (a > 0.0) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("data.seed", 1)));
        for (Profile* p : {&f.V0, &f.V1, &f.W0, &f.W1}) {
            const double s = 1.0 + a * (2.0 * unit_draw(rng) - 1.0);
            *p = [g = *p, s](double x) { return s * g(x); };
        }
        f.name += "~perturbed";
    }
    return f;
}

/// [grid]: either nx (cells over the cone-sized domain) or dx.
Grid grid_from(const Config& c, double speed) {
    const double horizon = c.require_num("grid.horizon");
    if (!(horizon > 4.0)) throw ConfigurationError("grid.horizon must exceed 4");
    const double cfl = c.num("grid.cfl", 0.8);
    const double margin = c.num("grid.margin", 1.0);
    if (c.has("grid.nx")) {
        const long long nx = c.integer("grid.nx", 0);
        if (nx <= 0 || nx % 2) throw ConfigurationError("grid.nx must be a positive even integer");
        const double half = c.num("grid.half_width", speed * (horizon - 4.0) + 1.0 + margin);
        return Grid::symmetric_staggered(half, static_cast<std::size_t>(nx), horizon, cfl, speed);
    }
    return Grid::for_cone(c.require_num("grid.dx"), horizon, speed, cfl, margin);
}

json grid_json(const Grid& g) {
    return {{"nx", g.npoints()}, {"dx", num(g.dx)},          {"x_max", num(g.x_max)},
            {"nt", g.nt},        {"dt", num(g.dt)},          {"t_start", num(g.t_start)},
            {"t_end", num(g.t_end)}};
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const Run& run) {
    const Config& c = run.cfg;
    const double eps = c.require_num("data.epsilon");
    const double speed = c.num("system.c", 2.0);
    const DataFamily fam = family_from(c);
    const Grid g = grid_from(c, speed);
    if (!run.out) throw UsageError("simulate needs --out");
    OutputDir dir(*run.out);
    const std::string hash = c.hash();
    if (run.resume && dir.done("simulate", hash)) {
        std::cout << "simulate: up to date\n";
        return ok;
    }

    CoupledOptions o;
    o.stride = static_cast<std::size_t>(c.integer("system.stride", 0));
    o.blowup_factor = c.num("system.blowup_factor", 1e3);
    o.nonlinear = c.flag("system.nonlinear", true);
    o.corrector = c.flag("system.corrector", false);
    CoupledSolution sol = solve_coupled(fam, eps, speed, g, o);

    const json prov = run.provenance();
    std::vector<std::string> files{"summary.json"};
    if (c.flag("output.traces", true)) {
        dir.write_trace("V.mswl", sol.V, prov);
        dir.write_trace("W.mswl", sol.W, prov);
        files.insert(files.end(), {"V.mswl", "W.mswl"});
    }
    if (c.flag("output.reconstruct", false)) {
        RadialFields r = reconstruct_3d(sol.V, sol.W);
        dir.write_trace("v_radial.mswl", r.v, prov);
        dir.write_trace("w_radial.mswl", r.w, prov);
        files.insert(files.end(), {"v_radial.mswl", "w_radial.mswl"});
    }

    json s = prov;
    s["grid"] = grid_json(g);
    s["stride"] = sol.V.stride;
    s["levels_stored"] = sol.V.nt_stored;
    s["epsilon"] = num(eps);
    s["c"] = num(speed);
    s["data_family"] = fam.name;
    s["trivial"] = eps == 0.0;
    if (eps == 0.0) s["note"] = "zero data: V = W = 0 for all time";
    s["initial_monitor"] = num(sol.initial_monitor);
    s["blowup_threshold"] = num(sol.threshold);
    s["blowup"] = sol.blowup_time.has_value();
    s["blowup_time"] = opt_num(sol.blowup_time);
    s["t_reached"] = num(sol.V.last_time());
    s["max_abs_V"] = num(sol.V.max_abs());
    s["max_abs_W"] = num(sol.W.max_abs());
    s["l2_V"] = num(spacetime_l2(sol.V));
    s["l2_W"] = num(spacetime_l2(sol.W));
    s["parity_defect_V"] = num(sol.V.parity_defect(Parity::odd));
    s["parity_defect_W"] = num(sol.W.parity_defect(Parity::odd));
    dir.write_json("summary.json", s);
    dir.mark("simulate", hash, files);
    std::cout << "simulate: eps=" << eps << " c=" << speed << " nx=" << g.npoints() << " nt=" << g.nt
              << (sol.blowup_time ? " blowup at t=" + std::to_string(*sol.blowup_time) : std::string(" no blowup"))
              << "\n";
    return ok;
}

// ---------------------------------------------------------------------------
// iterate

NormReport report_from_json(const json& row) {
    NormReport r;
    r.j = row.value("j", 0);
    if (row.contains("k_used") && row["k_used"].is_number()) r.k_used = row["k_used"].get<int>();
    r.M = row.contains("M") && row["M"].is_number() ? row["M"].get<double>() : 0.0;
    return r;
}

int cmd_iterate(const Run& run) {
    const Config& c = run.cfg;
    const double eps = c.require_num("data.epsilon");
    const double speed = c.num("system.c", 2.0);
    const DataFamily fam = family_from(c);
    const Grid g = grid_from(c, speed);
    PicardOptions po;
    po.j_max = static_cast<int>(c.integer("iterate.j_max", 8));
    po.k_used = static_cast<int>(c.integer("iterate.k_used", 2));
    po.norm_stride = static_cast<std::size_t>(c.integer("iterate.norm_stride", 1));
    po.blowup_factor = c.num("system.blowup_factor", 1e3);
    if (po.j_max < 1) throw ConfigurationError("iterate.j_max must be >= 1");
    if (po.k_used < 0 || po.k_used > 3) throw ConfigurationError("iterate.k_used must lie in [0, 3]");

    // reports compared against a baseline ledger must use the same S-order
    std::optional<json> baseline;
    if (c.has("iterate.baseline")) {
        std::ifstream in(c.str("iterate.baseline", ""));
        if (!in) throw ConfigurationError("iterate.baseline: cannot read " + c.str("iterate.baseline", ""));
        baseline = json::parse(in, nullptr, false);
        if (baseline->is_discarded() || !baseline->contains("ledger"))
            throw ConfigurationError("iterate.baseline: not an iterate ledger");
        NormReport mine;
        mine.k_used = po.k_used;
        for (const auto& row : (*baseline)["ledger"]["rows"])
            if (row.contains("k_used") && row["k_used"].is_number()) require_comparable(mine, report_from_json(row));
    }
    if (!run.out) throw UsageError("iterate needs --out");
    OutputDir dir(*run.out);
    const std::string hash = c.hash();
    if (run.resume && dir.done("iterate", hash)) {
        std::cout << "iterate: up to date\n";
        return ok;
    }

    IterationLedger led = picard_iterate(fam, eps, speed, g, po);
    json j = run.provenance();
    j["grid"] = grid_json(g);
    j["ledger"] = to_json(led);
    if (baseline) {
        json cmp = json::array();
        for (const auto& row : led.rows) {
            if (!row.M) continue;
            for (const auto& b : (*baseline)["ledger"]["rows"])
                if (b.value("j", -1) == row.j && b["M"].is_number())
                    cmp.push_back({{"j", row.j}, {"M", row.M->M}, {"M_baseline", b["M"]}});
        }
        j["baseline_comparison"] = cmp;
    }
    std::string csv = "j,k_used,M,A,contraction_ratio,blowup";
    for (int t = 0; t < norm_term_count; ++t) csv += std::string(",") + roman(t);
    csv += "\n";
    auto cell = [](const std::optional<double>& v) {
        if (!v) return std::string();
        char b[32];
        std::snprintf(b, sizeof b, "%.17g", *v);
        return std::string(b);
    };
    for (const auto& row : led.rows) {
        csv += std::to_string(row.j) + "," + (row.M ? std::to_string(row.M->k_used) : "") + "," +
               cell(row.M ? std::optional<double>(row.M->M) : std::nullopt) + "," + cell(row.A) + "," +
               cell(row.contraction_ratio) + "," + cell(row.blowup);
        for (int t = 0; t < norm_term_count; ++t)
            csv += "," + cell(row.M ? std::optional<double>(row.M->terms[static_cast<std::size_t>(t)]) : std::nullopt);
        csv += "\n";
        std::cout << "j=" << row.j;
        if (row.M) std::cout << " M=" << row.M->M;
        if (row.A) std::cout << " A=" << *row.A;
        if (row.contraction_ratio) std::cout << " ratio=" << *row.contraction_ratio;
        if (row.blowup) std::cout << " blowup at t=" << *row.blowup;
        std::cout << "\n";
    }
    dir.write("ledger.csv", csv);
    dir.write_json("ledger.json", j);
    dir.mark("iterate", hash, {"ledger.csv", "ledger.json"});
    return ok;
}

// ---------------------------------------------------------------------------
// verify

std::vector<AuditConfig> family_spec(const Config& c) {
    const auto items = c.list("verify.family");
    if (items.empty()) throw UsageError("verify.family is empty");
    std::vector<AuditConfig> fam;
    for (const auto& item : items) {
        std::vector<std::string> f;
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ':')) f.push_back(detail::trim(part));
        if (f.empty() || f.size() > 3) throw ConfigurationError("verify.family entry must be data[:eps[:linear]]: " + item);
        AuditConfig a;
        a.data = f[0];
        (void)data_family(a.data);
        a.epsilon = f.size() > 1 ? std::stod(f[1]) : 0.5;
        if (f.size() > 2) {
            if (f[2] != "linear") throw ConfigurationError("verify.family: unknown modifier " + f[2]);
            a.nonlinear = false;
        }
        a.c = c.num("verify.c", 2.0);
        a.dx = c.num("verify.dx", 1.0 / 64.0);
        a.horizon = c.num("verify.horizon", 16.0);
        a.stride = static_cast<std::size_t>(c.integer("verify.stride", 2));
        fam.push_back(a);
    }
    return fam;
}

std::vector<AuditRequest> request_spec(const Config& c) {
    const auto items = c.list("verify.estimates");
    if (items.empty() || (items.size() == 1 && items[0] == "all")) return default_requests();
    std::vector<AuditRequest> out;
    for (const auto& s : items) {
        const auto at = s.find('@');
        AuditRequest r{parse_estimate_id(s.substr(0, at)), 0.0};
        if (at != std::string::npos) r.p = std::stod(s.substr(at + 1));
        out.push_back(r);
    }
    return out;
}

int cmd_verify(const Run& run) {
    const Config& c = run.cfg;
    const auto fam = family_spec(c);
    std::vector<AuditRequest> req;
    try {
        req = request_spec(c);
    } catch (const ParameterError& e) {
        throw UsageError(e.what());
    }
    const std::string fsrc = c.str("verify.forcing", "recorded");
    if (fsrc != "recorded" && fsrc != "box_residual") throw ConfigurationError("verify.forcing: recorded | box_residual");
    const ForcingSource src = fsrc == "recorded" ? ForcingSource::recorded : ForcingSource::box_residual;
    const bool check_pins = c.flag("verify.regression", true);
    if (!run.out) throw UsageError("verify needs --out");
    OutputDir dir(*run.out);
    const std::string hash = c.hash();
    if (run.resume && dir.done("verify", hash)) {
        std::cout << "verify: up to date\n";
        return ok;
    }

    // one job per family member, merged in family order
    std::vector<AuditTable> parts(fam.size());
    for (std::size_t start = 0; start < fam.size(); start += run.threads) {
        std::vector<std::future<AuditTable>> jobs;
        for (std::size_t i = start; i < std::min(fam.size(), start + run.threads); ++i)
            jobs.push_back(std::async(run.threads > 1 ? std::launch::async : std::launch::deferred,
                                      [&, i] { return audit_family(req, {fam[i]}, src); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) parts[start + i] = jobs[i].get();
    }
    AuditTable table;
    for (auto& p : parts) {
        for (auto& r : p.reports) table.reports.push_back(std::move(r));
        for (const auto& [k, v] : p.max_ratio) {
            auto it = table.max_ratio.find(k);
            if (it == table.max_ratio.end() || v > it->second) table.max_ratio[k] = v;
        }
    }

    std::string csv = audit_csv_header();
    json rows = json::array();
    bool refused = false, violated = false;
    for (const auto& r : table.reports) {
        csv += to_csv_row(r);
        rows.push_back(to_json(r));
        refused = refused || r.refused;
    }
    json summary = json::array();
    for (const auto& [key, ratio] : table.max_ratio) {
        const auto id = static_cast<EstimateId>(key.first);
        const auto pin = regression_pin(id, key.second);
        const bool bad = check_pins && pin && !(ratio <= *pin);
        violated = violated || bad;
        summary.push_back({{"id", to_string(id)},
                           {"p", key.second},
                           {"max_ratio", ratio},
                           {"pin", pin ? json(*pin) : json(nullptr)},
                           {"violation", bad}});
        std::cout << to_string(id) << (registry_entry(id).uses_p ? " p=" + std::to_string(key.second) : "")
                  << " max ratio " << ratio << (pin ? " (pin " + std::to_string(*pin) + ")" : "")
                  << (bad ? " VIOLATION" : "") << "\n";
    }
    for (const auto& r : table.reports)
        if (r.refused) std::cout << to_string(r.id) << " refused on " << r.config << ": " << r.reason << "\n";

    json j = run.provenance();
    j["reports"] = rows;
    j["max_ratio"] = summary;
    j["refused"] = refused;
    j["violation"] = violated;
    dir.write("audit.csv", csv);
    dir.write_json("audit.json", j);
    dir.mark("verify", hash, {"audit.csv", "audit.json"});
    if (violated) return violation;
    if (refused) return refusal;
    return ok;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const Run& run) {
    const Config& c = run.cfg;
    std::vector<LifespanRecord> recs;
    json j = run.provenance();
    const bool replay = c.has("sweep.replay");
    if (!run.out) throw UsageError("sweep needs --out");
    OutputDir dir(*run.out);
    const std::string hash = c.hash();
    if (run.resume && dir.done("sweep", hash)) {
        std::cout << "sweep: up to date\n";
        return ok;
    }

    if (replay) {
        const std::string path = c.str("sweep.replay", "");
        std::ifstream in(path);
        if (!in) throw ConfigurationError("sweep.replay: cannot read " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        recs = parse_sweep_csv(ss.str());
        j["replay_of"] = path;
    } else {
        auto eps = c.numbers("sweep.epsilons");
        if (eps.empty()) throw ConfigurationError("config: missing required field 'sweep.epsilons'");
        std::sort(eps.begin(), eps.end(), std::greater<>());
        eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
        SweepPolicy pol;
        pol.dx = c.num("sweep.dx", pol.dx);
        pol.cfl = c.num("sweep.cfl", pol.cfl);
        pol.margin = c.num("sweep.margin", pol.margin);
        pol.blowup_factor = c.num("sweep.blowup_factor", pol.blowup_factor);
        pol.confirm = c.flag("sweep.confirm", pol.confirm);
        pol.early_exit = c.flag("sweep.early_exit", pol.early_exit);
        pol.nonlinear = c.flag("system.nonlinear", true);
        pol.threads = run.threads;
        recs = sweep(family_from(c), c.num("system.c", 2.0), eps, c.num("sweep.horizon", 512.0), pol);
    }

    const FitResult fit = fit_exp_law(recs);
    const LawComparison laws = competing_law_test(recs);
    json rj = json::array();
    for (const auto& r : recs) {
        rj.push_back(to_json(r));
        std::cout << "eps=" << r.epsilon << " T*="
                  << (r.T_star ? std::to_string(*r.T_star) : std::string("survived to ") + std::to_string(r.horizon))
                  << "\n";
    }
    j["records"] = rj;
    j["fit"] = to_json(fit);
    j["law_comparison"] = to_json(laws);
    j["all_survived"] = fit.n_points == 0 && !recs.empty();
    std::cout << "fit: " << (fit.insufficient ? "insufficient" : "c~=" + std::to_string(fit.c_tilde) +
                                                                     " r2=" + std::to_string(fit.r_squared))
              << "\n";

    json plot = run.provenance();
    plot["columns"] = {"inv_eps2", "log_T_star"};
    plot["fit"] = to_json(fit);
    dir.write("records.csv", sweep_csv(recs));
    dir.write_json("records.json", j);
    dir.write("plot.csv", plot_pairs(recs));
    dir.write_json("plot.json", plot);
    dir.mark("sweep", hash, {"records.csv", "records.json", "plot.csv", "plot.json"});
    return ok;
}

// ---------------------------------------------------------------------------
// regions, info

int cmd_regions(const Run& run) {
    const Config& c = run.cfg;
    const double speed = c.num("regions.c", c.num("system.c", 2.0));
    const double T = c.require_num("regions.horizon");
    const double enl = c.num("regions.enlargement", 1.0);
    const auto regions = enumerate_regions(speed, T, enl);
    json j = run.provenance();
    j["regions"] = regions_to_json(regions);
    if (c.has("regions.t") || c.has("regions.r")) {
        const auto g = classify_point(c.require_num("regions.t"), c.require_num("regions.r"), speed, T);
        j["point"] = g ? to_json(*g) : json("outside support");
        std::cout << "point: " << j["point"].dump() << "\n";
    }
    std::string csv = "tau,kind,value,t_lo,t_hi,q_lo,q_hi\n";
    char buf[256];
    for (const auto& g : regions) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.tau, to_string(g.kind), g.value,
                      g.t_lo(), g.t_hi(), g.q_lo / g.enlargement, g.q_hi * g.enlargement);
        csv += buf;
    }
    std::cout << regions.size() << " regions for c=" << speed << " T=" << T << "\n";
    if (run.out) {
        OutputDir dir(*run.out);
        dir.write("regions.csv", csv);
        dir.write_json("regions.json", j);
    }
    return ok;
}

int cmd_info(const Run& run) {
    json j = run.provenance();
    json p = json::array();
    for (const auto& pr : presets()) p.push_back({{"name", pr.name}, {"command", pr.command}});
    j["presets"] = p;
    j["data_families"] = {"paper-bump", "pessimal", "bump-w<width>"};
    json reg = json::array();
    for (const auto& e : estimate_registry()) reg.push_back({{"id", to_string(e.id)}, {"name", e.name}});
    j["estimates"] = reg;
    j["k_max"] = {{"finite_difference", limits::k_max_finite_difference},
                  {"commuted_pde", limits::k_max_commuted_pde}};
    j["threads"] = run.threads;
    std::cout << j.dump(2) << "\n";
    if (run.out) {
        OutputDir dir(*run.out);
        dir.write_json("info.json", j);
    }
    return ok;
}

unsigned default_threads() {
    if (const char* e = std::getenv("MSWAVE_THREADS")) {
        try {
            const long v = std::stol(e);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mswave: two-speed semilinear wave lab"};
    app.require_subcommand(1);
    std::string config_path, out_dir, preset;
    std::vector<std::string> sets;
    int threads = 0;
    bool resume = false;
    app.add_option("--config", config_path, "configuration file (key-value with [sections], or JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (default: MSWAVE_THREADS or all cores)")->check(CLI::PositiveNumber);
    app.add_flag("--resume", resume, "skip stages whose config hash matches the output directory");
    app.add_option("--preset", preset, "named preset, overridden by --config and --set");
    app.add_option("--set", sets, "override one value: section.key=value");
    app.fallthrough();

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "solve the coupled system directly"},
        {"iterate", "Picard iteration with norm ledger"},
        {"verify", "audit the estimate registry on a family of solutions"},
        {"sweep", "lifespan sweep over epsilon and law fits"},
        {"regions", "dyadic region decomposition"},
        {"info", "version, presets, registry"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    Run run;
    run.command = app.get_subcommands().front()->get_name();
    run.threads = threads > 0 ? static_cast<unsigned>(threads) : default_threads();
    run.resume = resume;
    if (!out_dir.empty()) run.out = out_dir;

    try {
        if (!preset.empty()) {
            const auto p = find_preset(preset);
            if (!p) throw UsageError("unknown preset: " + preset);
            if (run.command != p->command && run.command != "info")
                throw UsageError("preset " + preset + " is for '" + p->command + "'");
            run.cfg = Config::parse_text(p->text);
            run.cfg.set("preset", preset);
        }
        if (!config_path.empty()) run.cfg.merge(Config::load(config_path));
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects section.key=value: " + s);
            run.cfg.set(detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
        }
        if (run.command == "simulate") return cmd_simulate(run);
        if (run.command == "iterate") return cmd_iterate(run);
        if (run.command == "verify") return cmd_verify(run);
        if (run.command == "sweep") return cmd_sweep(run);
        if (run.command == "regions") return cmd_regions(run);
        return cmd_info(run);
    } catch (const UsageError& e) {
        std::cerr << "mswave: " << e.what() << "\n";
        return usage;
    } catch (const ConfigurationError& e) {
        std::cerr << "mswave: " << e.what() << "\n";
        return usage;
    } catch (const ParameterError& e) {
        std::cerr << "mswave: " << e.what() << "\n";
        return usage;
    } catch (const ValidationError& e) {
        std::cerr << "mswave: refused: " << e.what() << "\n";
        return refusal;
    } catch (const DomainError& e) {
        std::cerr << "mswave: refused: " << e.what() << "\n";
        return refusal;
    } catch (const std::exception& e) {
        std::cerr << "mswave: " << e.what() << "\n";
        return generic;
    }
}
