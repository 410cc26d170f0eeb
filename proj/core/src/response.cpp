#include "tnresp/response.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace tnresp {

ResponseSystem make_response_system(const Dynamics& dyn, const StateDensity& rho, const TimeGrid& grid, int rank_cap) {
    ResponseSystem sys;
    sys.grid = grid;
    sys.dyn = dyn;
    sys.rho = rho;
    const auto free = propagate_free(dyn, grid);
    std::vector<HeisenbergTrajectory> fam;
    for (const auto& q : dyn.couplings) fam.push_back(heisenberg_trajectory(free, q, "none"));
    sys.table = std::make_shared<MomentTable>(std::move(fam), rho, rank_cap);
    return sys;
}

const char* to_string(Assembly a) {
    switch (a) {
        case Assembly::direct: return "direct";
        case Assembly::causal: return "causal";
        case Assembly::kubo: return "kubo";
        case Assembly::oracle: return "oracle";
    }
    return "?";
}

int ResponseFunction::outputs() const {
    return blocks.size() == 4 ? blocks[0] + blocks[1] : blocks.at(0);
}

int ResponseFunction::inputs() const {
    return blocks.size() == 4 ? blocks[2] + blocks[3] : blocks.at(1);
}

EtaSigmaPair substitute_to_eta_sigma(const Signal& eta_minus, const Signal& eta_plus, double hbar) {
    require_same_grid(eta_minus.grid, eta_plus.grid, "substitute_to_eta_sigma");
    const TimeGrid& g = eta_plus.grid;
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;
    Vec eta = -I_UNIT * (eta_plus.values - eta_minus.values);
    Vec sigma = hbar * (Pp * eta_plus.values + Pm * eta_minus.values);
    return {Signal(g, eta), Signal(g, sigma)};
}

EtaPm substitute_to_eta_pm(const Signal& eta, const Signal& sigma, double hbar) {
    require_same_grid(eta.grid, sigma.grid, "substitute_to_eta_pm");
    const TimeGrid& g = eta.grid;
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;
    Vec plus = I_UNIT * (Pm * eta.values) + sigma.values / hbar;
    Vec minus = -I_UNIT * (Pp * eta.values) + sigma.values / hbar;
    return {Signal(g, minus), Signal(g, plus)};
}

cplx response_functional(const Signal& eta, const Signal& sigma, const CurrentProfile& j, const Dynamics& dyn,
                         const StateDensity& rho) {
    auto pm = substitute_to_eta_pm(eta, sigma, dyn.hbar);
    return characteristic_functional(pm.minus, pm.plus, j, dyn, rho);
}

namespace {

Split split_for(Side side, Label label, SplitRule rule) {
    if (rule == SplitRule::charged_display && label == Label::fdag) return Split::minus;
    return side == Side::minus ? Split::minus : Split::plus;
}

cplx ipow(cplx base, int n) {
    cplx r = 1.0;
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

std::string leg_name(Label l, bool output, int index, Split split) {
    std::ostringstream os;
    os << to_string(l);
    if (split == Split::plus) os << "(+)";
    if (split == Split::minus) os << "(-)";
    os << "(" << (output ? "t" : "t'") << index + 1 << ")";
    return os.str();
}

// Groups of leg positions with the same role and label; the tensor is symmetric in each.
std::vector<std::vector<int>> blocks_of(const std::vector<Label>& outputs, const std::vector<Label>& inputs) {
    std::vector<std::vector<int>> groups;
    auto add = [&](const std::vector<Label>& labs, int offset) {
        std::map<Label, std::vector<int>> by;
        for (size_t i = 0; i < labs.size(); ++i) by[labs[i]].push_back(offset + static_cast<int>(i));
        for (auto& [l, g] : by)
            if (g.size() > 1) groups.push_back(g);
    };
    add(outputs, 0);
    add(inputs, static_cast<int>(outputs.size()));
    return groups;
}

std::vector<LegMeta> response_legs(const std::vector<Label>& outputs, const std::vector<Label>& inputs) {
    std::vector<LegMeta> legs;
    for (auto l : outputs) legs.push_back({Side::plus, Split::none, l, "none"});
    for (auto l : inputs) legs.push_back({Side::plus, Split::none, l, "none"});
    return legs;
}

}  // namespace

std::string TermDescriptor::canonical() const {
    std::ostringstream minus, plus;
    auto put = [](std::ostringstream& os, const std::string& s) {
        if (os.tellp() > 0) os << ' ';
        os << s;
    };
    for (size_t i = 0; i < output_sides.size(); ++i) {
        const Label l = output_labels.empty() ? Label::neutral : output_labels[i];
        put(output_sides[i] == Side::minus ? minus : plus, leg_name(l, true, static_cast<int>(i), output_splits[i]));
    }
    for (size_t i = 0; i < input_sides.size(); ++i) {
        const Label l = input_labels.empty() ? Label::neutral : input_labels[i];
        put(input_sides[i] == Side::minus ? minus : plus, leg_name(l, false, static_cast<int>(i), Split::none));
    }
    std::ostringstream os;
    os << (sign < 0 ? "-" : "+") << " (-i/hbar)^" << hbar_power << " <T-[" << minus.str() << "] T+[" << plus.str()
       << "]>";
    return os.str();
}

std::vector<TermDescriptor> enumerate_terms(const std::vector<Label>& outputs, const std::vector<Label>& inputs,
                                            SplitRule rule) {
    const int m = static_cast<int>(outputs.size());
    const int n = static_cast<int>(inputs.size());
    if (m + n < 1) throw PreconditionError("enumerate_terms needs m + n >= 1");
    std::vector<TermDescriptor> terms;
    // Each labeled side assignment is one distinct structure: permuting factors under an
    // ordering never maps one subset choice onto another, so no duplicates arise.
    for (unsigned so = 0; so < (1u << m); ++so) {
        for (unsigned si = 0; si < (1u << n); ++si) {
            TermDescriptor d;
            d.output_labels = outputs;
            d.input_labels = inputs;
            for (int i = 0; i < m; ++i) {
                const Side s = (so >> i) & 1u ? Side::minus : Side::plus;
                d.output_sides.push_back(s);
                d.output_splits.push_back(split_for(s, outputs[i], rule));
                d.differs_from_side_rule |= d.output_splits.back() != split_for(s, outputs[i], SplitRule::by_side);
            }
            for (int i = 0; i < n; ++i) d.input_sides.push_back((si >> i) & 1u ? Side::minus : Side::plus);
            d.sign = std::popcount(si) % 2 ? -1 : 1;
            d.hbar_power = n;
            terms.push_back(std::move(d));
        }
    }
    return terms;
}

std::vector<TermDescriptor> enumerate_terms(int m, int n) {
    return enumerate_terms(std::vector<Label>(m, Label::neutral), std::vector<Label>(n, Label::neutral));
}

CorrelationTensor assemble_direct(const MomentTable& table, const std::vector<Label>& outputs,
                                  const std::vector<Label>& inputs, double hbar, SplitRule rule) {
    const int m = static_cast<int>(outputs.size());
    const int n = static_cast<int>(inputs.size());
    const int r = m + n;
    if (r < 1) throw PreconditionError("assembly needs at least one leg");
    if (r > table.rank_cap()) throw PreconditionError("rank cap exceeded: m + n = " + std::to_string(r));
    const TimeGrid& g = table.grid();
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;

    CorrelationTensor result(g, response_legs(outputs, inputs));
    // group terms by the output side pattern: inputs are summed first, then the output
    // legs are split once per pattern
    for (unsigned so = 0; so < (1u << m); ++so) {
        CorrelationTensor H(g, result.legs);
        for (unsigned si = 0; si < (1u << n); ++si) {
            std::vector<LegMeta> legs = result.legs;
            for (int i = 0; i < m; ++i) legs[i].side = (so >> i) & 1u ? Side::minus : Side::plus;
            for (int i = 0; i < n; ++i) legs[m + i].side = (si >> i) & 1u ? Side::minus : Side::plus;
            CorrelationTensor G = ordered_tensor(table, legs);
            if (std::popcount(si) % 2) G *= -1.0;
            H += G;
        }
        for (int i = 0; i < m; ++i) {
            const Side s = (so >> i) & 1u ? Side::minus : Side::plus;
            const Split sp = split_for(s, outputs[i], rule);
            H = apply_leg_matrix(H, i, sp == Split::plus ? Pp : Pm);
        }
        result += H;
    }
    result *= ipow(-I_UNIT / hbar, n);
    for (const auto& grp : blocks_of(outputs, inputs)) result = symmetrize_legs(result, grp);
    for (int i = 0; i < m; ++i) result.legs[i].split = Split::plus;  // marks a split output leg
    return result;
}

ResponseFunction finalize_real(CorrelationTensor t, std::vector<int> blocks, Assembly a, double abort_tol) {
    const double scale = t.max_abs();
    const double im = t.max_imag();
    ResponseFunction rf;
    rf.blocks = std::move(blocks);
    rf.assembly = a;
    // tensors that vanish identically (D^(0;n)) are judged on the absolute residue
    rf.imag_residue = scale > 1e-12 ? im / scale : im;
    if (rf.imag_residue > abort_tol) {
        std::ostringstream os;
        os << "reality breach: imaginary residue " << rf.imag_residue << " exceeds " << abort_tol << " ("
           << to_string(a) << " assembly)";
        throw NumericalError(os.str());
    }
    for (auto& v : t.data) v = cplx(v.real(), 0.0);
    rf.tensor = std::move(t);
    return rf;
}

ResponseFunction assemble_response(int m, int n, const ResponseSystem& sys) {
    if (m < 0 || n < 0 || m + n < 1) throw PreconditionError("assemble_response: need m + n >= 1");
    CorrelationTensor t = assemble_direct(*sys.table, std::vector<Label>(m, Label::neutral),
                                          std::vector<Label>(n, Label::neutral), sys.hbar());
    return finalize_real(std::move(t), {m, n}, Assembly::direct);
}

bool in_forbidden_region(std::span<const int> idx, int outputs) {
    const int r = static_cast<int>(idx.size());
    if (outputs >= r) return false;
    if (outputs == 0) return true;
    int mo = -1, mi = -1;
    for (int i = 0; i < r; ++i) {
        if (i < outputs) mo = std::max(mo, idx[i]);
        else mi = std::max(mi, idx[i]);
    }
    return mo < mi;
}

ResponseFunction assemble_response_causal(int m1, int n, const ResponseSystem& sys) {
    if (m1 < 1 || n < 0) throw PreconditionError("assemble_response_causal: need at least one output");
    const int r = m1 + n;
    if (r > sys.rank_cap()) throw PreconditionError("rank cap exceeded: m + n = " + std::to_string(r));
    const MomentTable& table = *sys.table;
    const TimeGrid& g = sys.grid;
    const int N = g.count;

    std::vector<LegMeta> base(r, LegMeta{Side::plus, Split::none, Label::neutral, "none"});
    // ordered tensors for every side assignment, bit i set = leg i on T_-
    std::vector<CorrelationTensor> G(1u << r);
    for (unsigned a = 0; a < (1u << r); ++a) {
        std::vector<LegMeta> legs = base;
        for (int i = 0; i < r; ++i) legs[i].side = (a >> i) & 1u ? Side::minus : Side::plus;
        G[a] = ordered_tensor(table, legs);
    }

    CorrelationTensor D(g, base);
    std::vector<int> full(r), rest_idx;
    for (unsigned S = 1; S < (1u << m1); ++S) {
        std::vector<int> rest_out;
        for (int i = 0; i < m1; ++i)
            if (!((S >> i) & 1u)) rest_out.push_back(i);
        const int nr = static_cast<int>(rest_out.size());
        std::vector<int> rest = rest_out;  // slice legs: remaining outputs, then inputs
        for (int j = 0; j < n; ++j) rest.push_back(m1 + j);
        std::vector<LegMeta> slice_legs(rest.size(), base[0]);

        for (int tau = 0; tau < N; ++tau) {
            if (nr > 0 && tau == 0) continue;  // remaining outputs need dummy times < tau
            for (unsigned so = 0; so < (1u << nr); ++so) {
                CorrelationTensor slice(g, slice_legs);
                for (size_t f = 0; f < slice.data.size(); ++f) {
                    slice.unravel(f, rest_idx);
                    bool ok = true;
                    for (int j = 0; j < n; ++j) ok &= rest_idx[nr + j] < tau;  // strict theta(tau - t')
                    if (!ok) continue;
                    for (int q = 0; q < r; ++q) full[q] = tau;
                    for (size_t q = 0; q < rest.size(); ++q) full[rest[q]] = rest_idx[q];
                    cplx acc = 0;
                    for (unsigned si = 0; si < (1u << n); ++si) {
                        unsigned a = 0;  // designated legs sit on T_- (they are latest: either side is equal)
                        for (int i = 0; i < m1; ++i)
                            if ((S >> i) & 1u) a |= 1u << i;
                        for (int q = 0; q < nr; ++q)
                            if ((so >> q) & 1u) a |= 1u << rest_out[q];
                        for (int j = 0; j < n; ++j)
                            if ((si >> j) & 1u) a |= 1u << (m1 + j);
                        const cplx v = G[a].at(std::span<const int>(full));
                        acc += std::popcount(si) % 2 ? -v : v;
                    }
                    slice.data[f] = acc;
                }
                for (int q = 0; q < nr; ++q)
                    slice = convolve_leg_truncated(slice, q, (so >> q) & 1u ? SplitSign::minus : SplitSign::plus, tau - 1);
                // scatter onto tuples where every designated output equals tau
                for (size_t f = 0; f < slice.data.size(); ++f) {
                    if (slice.data[f] == 0.0) continue;
                    slice.unravel(f, rest_idx);
                    for (int q = 0; q < r; ++q) full[q] = tau;
                    for (size_t q = 0; q < rest.size(); ++q) full[rest[q]] = rest_idx[q];
                    D.at(std::span<const int>(full)) += slice.data[f];
                }
            }
        }
    }
    D *= ipow(-I_UNIT / sys.hbar(), n);
    std::vector<Label> outs(m1, Label::neutral), ins(n, Label::neutral);
    for (const auto& grp : blocks_of(outs, ins)) D = symmetrize_legs(D, grp);
    std::vector<int> idx;
    for (size_t f = 0; f < D.data.size(); ++f) {
        D.unravel(f, idx);
        if (in_forbidden_region(idx, m1)) D.data[f] = 0.0;
    }
    return finalize_real(std::move(D), {m1, n}, Assembly::causal);
}

ResponseFunction kubo_linear(const ResponseSystem& sys) {
    const auto& R = sys.table->full({0, 0});
    const int N = sys.grid.count;
    CorrelationTensor t(sys.grid, std::vector<LegMeta>(2));
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
            const double theta = a > b ? 1.0 : (a == b ? 0.5 : 0.0);
            if (theta == 0.0) continue;
            const cplx comm = R[static_cast<size_t>(a) * N + b] - R[static_cast<size_t>(b) * N + a];
            t.at({a, b}) = (-I_UNIT / sys.hbar()) * theta * comm;
        }
    return finalize_real(std::move(t), {1, 1}, Assembly::kubo);
}

CorrelationTensor time_normal_tensor(const MomentTable& table, int rank) {
    return assemble_direct(table, std::vector<Label>(rank, Label::neutral), {}, 1.0);
}

double time_normal_average(const MomentTable& table, std::span<const int> times, double* imag_residue) {
    const int r = static_cast<int>(times.size());
    if (r < 1 || r > table.rank_cap()) throw PreconditionError("time_normal_average: rank out of range");
    const TimeGrid& g = table.grid();
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;
    cplx total = 0;
    std::vector<int> idx;
    for (unsigned a = 0; a < (1u << r); ++a) {
        std::vector<LegMeta> legs(r);
        for (int i = 0; i < r; ++i) legs[i].side = (a >> i) & 1u ? Side::minus : Side::plus;
        const CorrelationTensor G = ordered_tensor(table, legs);
        for (size_t f = 0; f < G.data.size(); ++f) {
            G.unravel(f, idx);
            cplx w = 1.0;
            for (int i = 0; i < r; ++i) w *= ((a >> i) & 1u ? Pm : Pp)(times[i], idx[i]);
            total += w * G.data[f];
        }
    }
    if (imag_residue) *imag_residue = std::abs(total.imag());
    return total.real();
}

namespace {

MomentTable gkk_table(const HeisenbergTrajectory& traj, const StateDensity& rho, int rank) {
    const TimeGrid& g = traj.grid;
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;
    const int N = traj.size();
    const int D = static_cast<int>(traj[0].rows());
    HeisenbergTrajectory qm, qp;
    qm.grid = qp.grid = g;
    qm.source = qp.source = traj.source;
    for (int t = 0; t < N; ++t) {
        Mat a = Mat::Zero(D, D), b = Mat::Zero(D, D);
        for (int s = 0; s < N; ++s) {
            a += Pm(t, s) * traj[s];
            b += Pp(t, s) * traj[s];
        }
        qm.ops.push_back(std::move(a));
        qp.ops.push_back(std::move(b));
    }
    return MomentTable({qm, qp}, rho, std::max(rank, 1));
}

}  // namespace

CorrelationTensor gkk_time_normal_tensor(const HeisenbergTrajectory& traj, const StateDensity& rho, int rank) {
    if (rank < 1 || rank > 3) throw PreconditionError("gkk_time_normal_tensor: rank must be 1..3");
    MomentTable table = gkk_table(traj, rho, rank);
    CorrelationTensor acc(traj.grid, std::vector<LegMeta>(rank));
    for (unsigned a = 0; a < (1u << rank); ++a) {
        std::vector<LegMeta> legs(rank);
        std::vector<int> fam(rank);
        for (int i = 0; i < rank; ++i) {
            const bool minus = (a >> i) & 1u;
            legs[i].side = minus ? Side::minus : Side::plus;
            legs[i].split = minus ? Split::minus : Split::plus;
            fam[i] = minus ? 0 : 1;
        }
        acc += ordered_tensor(table, legs, fam);
    }
    return acc;
}

double gkk_time_normal_average(const HeisenbergTrajectory& traj, const StateDensity& rho, std::span<const int> times) {
    const int r = static_cast<int>(times.size());
    if (r < 1 || r > 3) throw PreconditionError("gkk_time_normal_average: rank must be 1..3");
    const TimeGrid& g = traj.grid;
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;
    const int D = static_cast<int>(traj[0].rows());
    auto part = [&](int t, bool minus) {
        Mat a = Mat::Zero(D, D);
        for (int s = 0; s < traj.size(); ++s) a += (minus ? Pm : Pp)(t, s) * traj[s];
        return a;
    };
    cplx total = 0;
    for (unsigned a = 0; a < (1u << r); ++a) {
        std::vector<HeisenbergTrajectory> split_ops(r);
        std::vector<const HeisenbergTrajectory*> ptrs(r);
        OrderingSpec ord;
        for (int i = 0; i < r; ++i) {
            const bool minus = (a >> i) & 1u;
            split_ops[i].grid = g;
            split_ops[i].ops.assign(traj.size(), Mat());
            split_ops[i].ops[times[i]] = part(times[i], minus);
            (minus ? ord.minus_legs : ord.plus_legs).push_back(i);
        }
        for (int i = 0; i < r; ++i) ptrs[i] = &split_ops[i];
        total += ordered_average(ptrs, ord, times, rho);
    }
    return total.real();
}

CorrelationTensor split_inputs(const CorrelationTensor& t, int first_input, SplitSign sign) {
    CorrelationTensor out = t;
    for (int l = first_input; l < t.rank(); ++l)
        out = apply_leg_matrix(out, l, split_kernel(t.grid, sign).matrix);
    return out;
}

CorrelationTensor reconstruct_green(int k, int l, const std::map<std::pair<int, int>, ResponseFunction>& responses,
                                    double hbar) {
    const int r = k + l;
    if (r < 1) throw PreconditionError("reconstruct_green: need k + l >= 1");
    TimeGrid g;
    bool have_grid = false;
    for (const auto& [key, rf] : responses) {
        g = rf.tensor.grid;
        have_grid = true;
        break;
    }
    if (!have_grid) throw PreconditionError("reconstruct_green: no response functions supplied");
    std::vector<LegMeta> legs(r);
    for (int i = 0; i < k; ++i) legs[i].side = Side::minus;
    CorrelationTensor out(g, legs);
    const Mat& Pp = split_kernel(g, SplitSign::plus).matrix;
    const Mat& Pm = split_kernel(g, SplitSign::minus).matrix;

    for (unsigned A = 0; A < (1u << k); ++A) {
        for (unsigned B = 0; B < (1u << l); ++B) {
            std::vector<int> outs, ins_minus, ins_plus;
            for (int i = 0; i < k; ++i) ((A >> i) & 1u ? outs : ins_minus).push_back(i);
            for (int i = 0; i < l; ++i) ((B >> i) & 1u ? outs : ins_plus).push_back(k + i);
            const int mo = static_cast<int>(outs.size());
            const int ni = r - mo;
            auto it = responses.find({mo, ni});
            if (it == responses.end())
                throw PreconditionError("reconstruct_green: missing D^(" + std::to_string(mo) + ";" + std::to_string(ni) + ")");
            CorrelationTensor T = it->second.tensor;
            if (T.rank() != r) throw PreconditionError("reconstruct_green: ingredient has wrong rank");
            // T_- inputs enter with the (+) split, T_+ inputs with the (-) split
            int leg = mo;
            for (size_t q = 0; q < ins_minus.size(); ++q, ++leg) T = apply_leg_matrix(T, leg, Pp);
            for (size_t q = 0; q < ins_plus.size(); ++q, ++leg) T = apply_leg_matrix(T, leg, Pm);
            std::vector<int> source_order = outs;  // source leg q sits at target source_order[q]
            source_order.insert(source_order.end(), ins_minus.begin(), ins_minus.end());
            source_order.insert(source_order.end(), ins_plus.begin(), ins_plus.end());
            std::vector<int> perm(r);
            for (int q = 0; q < r; ++q) perm[source_order[q]] = q;
            T = permute_legs(T, perm);
            const cplx w = ipow(-I_UNIT, static_cast<int>(ins_minus.size())) * ipow(I_UNIT, static_cast<int>(ins_plus.size())) *
                           std::pow(hbar, ni);
            T *= w;
            out += T;
        }
    }
    out.legs = legs;
    return out;
}

}  // namespace tnresp
