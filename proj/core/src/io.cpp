#include "tnresp/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace tnresp {

using nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw PreconditionError("cannot write " + path);
    if (!binary) f << std::setprecision(17);
    return f;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
    if (!f) throw PreconditionError("cannot read " + path);
    return f;
}

// JSON cannot hold inf/nan; null keeps the record parseable.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

// ---- blob primitives; the format is little-endian and the hosts we build on are too
static_assert(std::endian::native == std::endian::little, "blob format assumes a little-endian host");

enum class BlobKind : std::uint32_t { tensor = 1, propagator = 2, heisenberg = 3 };

struct BlobWriter {
    std::ofstream f;
    template <class T>
    void put(const T& v) {
        f.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_mat(const Mat& m) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                put(m(i, j).real());
                put(m(i, j).imag());
            }
    }
};

struct BlobReader {
    std::ifstream f;
    std::string path;
    template <class T>
    T get() {
        T v{};
        f.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!f) throw PreconditionError(path + ": truncated blob");
        return v;
    }
    Mat get_mat(int dim) {
        Mat m(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) {
                const double re = get<double>();
                const double im = get<double>();
                m(i, j) = cplx(re, im);
            }
        return m;
    }
};

struct BlobHeader {
    BlobKind kind;
    TimeGrid grid;
    std::uint32_t dim;
    std::uint32_t components;
};

void write_header(BlobWriter& w, const BlobHeader& h) {
    w.f.write("TNRB", 4);
    w.put<std::uint32_t>(kBlobVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(h.kind));
    w.put(h.grid.t0);
    w.put(h.grid.dt);
    w.put<std::int32_t>(h.grid.count);
    w.put<std::int32_t>(h.grid.pad_factor);
    w.put(h.dim);
    w.put(h.components);
}

BlobHeader read_header(BlobReader& r, BlobKind expected) {
    char magic[4];
    r.f.read(magic, 4);
    if (!r.f || std::memcmp(magic, "TNRB", 4) != 0) throw PreconditionError(r.path + ": not a tnresp blob");
    const auto version = r.get<std::uint32_t>();
    if (version != kBlobVersion)
        throw PreconditionError(r.path + ": blob version " + std::to_string(version) + " not supported");
    const auto kind = static_cast<BlobKind>(r.get<std::uint32_t>());
    if (kind != expected) throw PreconditionError(r.path + ": blob holds a different object kind");
    const double t0 = r.get<double>();
    const double dt = r.get<double>();
    const int count = r.get<std::int32_t>();
    const int pad = r.get<std::int32_t>();
    BlobHeader h{kind, TimeGrid(t0, dt, count, pad), 0, 0};
    h.dim = r.get<std::uint32_t>();
    h.components = r.get<std::uint32_t>();
    return h;
}

void check_end(BlobReader& r) {
    r.f.peek();
    if (!r.f.eof()) throw PreconditionError(r.path + ": trailing bytes after blob payload");
}

ordered_json descriptor_json(const TermDescriptor& d) {
    ordered_json j;
    auto sides = [](const std::vector<Side>& v) {
        ordered_json a = ordered_json::array();
        for (auto s : v) a.push_back(to_string(s));
        return a;
    };
    ordered_json splits = ordered_json::array();
    for (auto s : d.output_splits) splits.push_back(to_string(s));
    j["canonical"] = d.canonical();
    j["sign"] = d.sign;
    j["hbar_power"] = d.hbar_power;
    j["output_sides"] = sides(d.output_sides);
    j["output_splits"] = splits;
    j["input_sides"] = sides(d.input_sides);
    if (!d.output_labels.empty() || !d.input_labels.empty()) {
        ordered_json ol = ordered_json::array(), il = ordered_json::array();
        for (auto l : d.output_labels) ol.push_back(to_string(l));
        for (auto l : d.input_labels) il.push_back(to_string(l));
        j["output_labels"] = ol;
        j["input_labels"] = il;
    }
    j["differs_from_side_rule"] = d.differs_from_side_rule;
    return j;
}

}  // namespace

// ---------------------------------------------------------------- CSV

void write_signal_csv(const std::string& path, const Signal& s) {
    auto f = open_out(path);
    f << "t,re,im\n";
    for (int k = 0; k < s.size(); ++k) f << s.grid.time(k) << ',' << s[k].real() << ',' << s[k].imag() << '\n';
}

Signal read_signal_csv(const std::string& path, int pad_factor) {
    auto f = open_in(path);
    std::vector<double> t;
    std::vector<cplx> v;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        for (auto& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        double a = 0, re = 0, im = 0;
        if (!(ls >> a >> re)) {
            if (t.empty()) continue;  // header
            throw PreconditionError(path + ":" + std::to_string(lineno) + ": expected t, re, im");
        }
        if (!(ls >> im)) im = 0.0;
        t.push_back(a);
        v.emplace_back(re, im);
    }
    if (t.size() < 2) throw PreconditionError(path + ": need at least two samples");
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (size_t k = 0; k < t.size(); ++k)
        if (std::abs(t[k] - (t.front() + dt * static_cast<double>(k))) > 1e-9 * std::max(1.0, dt))
            throw PreconditionError(path + ": samples are not uniformly spaced");
    TimeGrid g(t.front(), dt, static_cast<int>(t.size()), pad_factor);
    Vec values(g.count);
    for (int k = 0; k < g.count; ++k) values(k) = v[k];
    bool real = true;
    for (const auto& c : v) real = real && c.imag() == 0.0;
    return Signal(g, values, real);
}

void write_tensor_csv(const std::string& path, const CorrelationTensor& t, int outputs) {
    auto f = open_out(path);
    const int r = t.rank();
    for (int i = 0; i < r; ++i) f << 'i' << i << ',';
    for (int i = 0; i < r; ++i) f << 't' << i << ',';
    f << "re,im";
    if (outputs >= 0) f << ",region";
    f << '\n';
    std::vector<int> idx;
    for (size_t flat = 0; flat < t.size(); ++flat) {
        t.unravel(flat, idx);
        for (int v : idx) f << v << ',';
        for (int v : idx) f << t.grid.time(v) << ',';
        f << t.data[flat].real() << ',' << t.data[flat].imag();
        if (outputs >= 0) f << ',' << (in_forbidden_region(idx, outputs) ? "forbidden" : "allowed");
        f << '\n';
    }
}

void write_surface_csv(const std::string& path, const CorrelationTensor& t) {
    if (t.rank() != 2) throw PreconditionError("surface export needs a rank-2 tensor");
    auto f = open_out(path);
    const int N = t.extent();
    f << "t_out\\t_in";
    for (int b = 0; b < N; ++b) f << ',' << t.grid.time(b);
    f << '\n';
    for (int a = 0; a < N; ++a) {
        f << t.grid.time(a);
        for (int b = 0; b < N; ++b) f << ',' << t.at({a, b}).real();
        f << '\n';
    }
}

void write_kernel_csv(const std::string& path, const SplitKernel& k) {
    auto f = open_out(path);
    f << "# split kernel " << (k.sign == SplitSign::plus ? "plus" : "minus") << (k.strict ? " strict" : "")
      << ", N = " << k.grid.count << ", pad = " << k.grid.pad_factor << "; real block, blank line, imaginary block\n";
    for (int part = 0; part < 2; ++part) {
        if (part) f << '\n';
        for (Eigen::Index i = 0; i < k.matrix.rows(); ++i) {
            for (Eigen::Index j = 0; j < k.matrix.cols(); ++j) {
                if (j) f << ',';
                f << (part ? k.matrix(i, j).imag() : k.matrix(i, j).real());
            }
            f << '\n';
        }
    }
}

void write_table_csv(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
    auto f = open_out(path);
    for (size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
    f << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << '\n';
    }
}

void write_table_json(const std::string& path, const std::string& parameter, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
    ordered_json j;
    j["parameter"] = parameter;
    j["columns"] = columns;
    ordered_json r = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json o;
        for (size_t i = 0; i < row.size() && i < columns.size(); ++i) o[columns[i]] = number(row[i]);
        r.push_back(o);
    }
    j["rows"] = r;
    write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- blobs

void write_tensor_blob(const std::string& path, const CorrelationTensor& t) {
    BlobWriter w{open_out(path, true)};
    write_header(w, {BlobKind::tensor, t.grid, 0, static_cast<std::uint32_t>(t.rank())});
    for (const auto& l : t.legs) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.side));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.split));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.label));
    }
    for (const auto& v : t.data) {
        w.put(v.real());
        w.put(v.imag());
    }
}

CorrelationTensor read_tensor_blob(const std::string& path) {
    BlobReader r{open_in(path, true), path};
    const auto h = read_header(r, BlobKind::tensor);
    if (h.components > 16) throw PreconditionError(path + ": implausible tensor rank");
    std::vector<LegMeta> legs(h.components);
    for (auto& l : legs) {
        const auto side = r.get<std::uint8_t>(), split = r.get<std::uint8_t>(), label = r.get<std::uint8_t>();
        if (side > 1 || split > 2 || label > 2) throw PreconditionError(path + ": bad leg metadata");
        l.side = static_cast<Side>(side);
        l.split = static_cast<Split>(split);
        l.label = static_cast<Label>(label);
    }
    CorrelationTensor t(h.grid, legs);
    for (auto& v : t.data) {
        const double re = r.get<double>();
        const double im = r.get<double>();
        v = cplx(re, im);
    }
    check_end(r);
    return t;
}

void write_trajectory_blob(const std::string& path, const PropagatorTrajectory& p) {
    BlobWriter w{open_out(path, true)};
    const auto dim = static_cast<std::uint32_t>(p.U.empty() ? 0 : p.U.front().rows());
    const bool has_terminal = p.terminal.size() > 0;
    write_header(w, {BlobKind::propagator, p.grid, dim, static_cast<std::uint32_t>(p.U.size())});
    w.put<std::uint8_t>(has_terminal ? 1 : 0);
    w.put(p.max_top_population);
    for (const auto& U : p.U) w.put_mat(U);
    if (has_terminal) w.put_mat(p.terminal);
}

PropagatorTrajectory read_trajectory_blob(const std::string& path) {
    BlobReader r{open_in(path, true), path};
    const auto h = read_header(r, BlobKind::propagator);
    PropagatorTrajectory p;
    p.grid = h.grid;
    const bool has_terminal = r.get<std::uint8_t>() != 0;
    p.max_top_population = r.get<double>();
    if (static_cast<int>(h.components) != h.grid.count) throw PreconditionError(path + ": step count mismatch");
    for (std::uint32_t k = 0; k < h.components; ++k) p.U.push_back(r.get_mat(static_cast<int>(h.dim)));
    if (has_terminal) p.terminal = r.get_mat(static_cast<int>(h.dim));
    check_end(r);
    return p;
}

void write_heisenberg_blob(const std::string& path, const HeisenbergTrajectory& hz) {
    BlobWriter w{open_out(path, true)};
    const auto dim = static_cast<std::uint32_t>(hz.ops.empty() ? 0 : hz.ops.front().rows());
    write_header(w, {BlobKind::heisenberg, hz.grid, dim, static_cast<std::uint32_t>(hz.ops.size())});
    w.put<std::uint32_t>(static_cast<std::uint32_t>(hz.source.size()));
    w.f.write(hz.source.data(), static_cast<std::streamsize>(hz.source.size()));
    for (const auto& m : hz.ops) w.put_mat(m);
}

HeisenbergTrajectory read_heisenberg_blob(const std::string& path) {
    BlobReader r{open_in(path, true), path};
    const auto h = read_header(r, BlobKind::heisenberg);
    HeisenbergTrajectory hz;
    hz.grid = h.grid;
    const auto len = r.get<std::uint32_t>();
    if (len > 4096) throw PreconditionError(path + ": implausible source tag");
    hz.source.resize(len);
    r.f.read(hz.source.data(), len);
    if (static_cast<int>(h.components) != h.grid.count) throw PreconditionError(path + ": step count mismatch");
    for (std::uint32_t k = 0; k < h.components; ++k) hz.ops.push_back(r.get_mat(static_cast<int>(h.dim)));
    check_end(r);
    return hz;
}

// ---------------------------------------------------------------- JSON

std::string term_audit_json(int m, int n) {
    ordered_json j;
    j["response"] = {{"m", m}, {"n", n}};
    ordered_json terms = ordered_json::array();
    for (const auto& d : enumerate_terms(m, n)) terms.push_back(descriptor_json(d));
    j["term_count"] = terms.size();
    j["terms"] = terms;
    return j.dump(2) + "\n";
}

std::string charged_term_audit_json(int m, int n, int k, int l) {
    ordered_json j;
    j["response"] = {{"m", m}, {"n", n}, {"k", k}, {"l", l}};
    for (const auto rule : {SplitRule::by_side, SplitRule::charged_display}) {
        ordered_json terms = ordered_json::array();
        int flagged = 0;
        for (const auto& d : enumerate_charged_terms(m, n, k, l, rule)) {
            flagged += d.differs_from_side_rule;
            terms.push_back(descriptor_json(d));
        }
        const char* name = rule == SplitRule::by_side ? "by_side" : "display";
        j[name] = {{"term_count", terms.size()}, {"flagged_for_review", flagged}, {"terms", terms}};
    }
    j["note"] = "flagged display terms carry a split that differs from the side rule; they are kept as "
                "displayed for review";
    return j.dump(2) + "\n";
}

std::string report_json(const ScenarioConfig& cfg, const std::vector<CheckReport>& checks,
                        const std::vector<std::string>& artifacts) {
    ordered_json j;
    j["schema"] = "tnresp-report/1";
    const ConventionBlock c;
    j["conventions"] = {{"step_at_zero", c.step_at_zero},     {"dc_split", c.dc_split},
                        {"coinciding_times", c.coinciding_times}, {"causal_region", c.causal_region},
                        {"kernel", c.kernel},                 {"units", c.units}};
    ordered_json sc;
    sc["id"] = cfg.id;
    sc["model"] = {{"kind", to_string(cfg.model.kind)},
                   {"omega", cfg.model.omega},
                   {"chi", cfg.model.chi},
                   {"g", cfg.model.g},
                   {"mass", cfg.model.mass},
                   {"coupling", to_string(cfg.model.coupling)},
                   {"coupling_mode", cfg.model.coupling_mode}};
    sc["space"] = {{"cutoff", cfg.cutoffs}, {"hbar", cfg.hbar}};
    sc["state"] = {{"kind", cfg.state.kind},
                   {"alpha", cfg.state.alpha_re},
                   {"alpha_imag", cfg.state.alpha_im},
                   {"nbar", cfg.state.nbar},
                   {"leak_tol", cfg.state.leak_tol}};
    sc["grid"] = {{"t0", cfg.t0}, {"dt", cfg.dt}, {"count", cfg.count}, {"pad_factor", cfg.pad_factor}};
    ordered_json cur = ordered_json::array();
    for (const auto& w : cfg.currents)
        cur.push_back({{"waveform", w.kind},
                       {"amplitude", w.amplitude},
                       {"center", w.center},
                       {"width", w.width},
                       {"omega0", w.omega0},
                       {"file", w.file}});
    sc["currents"] = cur;
    ordered_json orders = ordered_json::array();
    for (auto [m, n] : cfg.orders) orders.push_back({m, n});
    sc["orders"] = orders;
    sc["seed"] = cfg.seed;
    sc["rank_cap"] = cfg.rank_cap;
    sc["fd_step"] = cfg.fd_step;
    j["scenario"] = sc;

    ordered_json arr = ordered_json::array();
    bool hard_ok = true;
    int failed = 0;
    for (const auto& r : checks) {
        ordered_json o;
        o["id"] = r.id;
        o["scenario"] = r.scenario;
        o["pass"] = r.pass;
        o["hard"] = r.hard;
        o["value"] = number(r.value);
        o["tolerance"] = number(r.tolerance);
        o["seed"] = r.seed;
        ordered_json metrics;
        for (const auto& [k, v] : r.metrics) metrics[k] = number(v);
        o["metrics"] = metrics;
        if (!r.detail.empty()) o["detail"] = r.detail;
        arr.push_back(o);
        if (!r.pass) ++failed;
        if (!r.pass && r.hard) hard_ok = false;
    }
    j["checks"] = arr;
    j["summary"] = {{"checks", checks.size()}, {"failed", failed}, {"hard_checks_pass", hard_ok}};
    j["artifacts"] = artifacts;
    return j.dump(2) + "\n";
}

std::string timing_json(const std::vector<CheckReport>& checks, double total_seconds) {
    ordered_json j;
    ordered_json per;
    for (const auto& r : checks) per[r.id] = r.runtime;
    j["checks"] = per;
    j["total_seconds"] = total_seconds;
    return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
    auto f = open_out(path);
    f << text;
    if (!f) throw PreconditionError("write failed for " + path);
}

}  // namespace tnresp
