#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tnresp/config.hpp"

namespace tnresp {

// Conventions every numeric output depends on; written into each report header.
struct ConventionBlock {
    std::string step_at_zero = "theta(0) = 1/2";
    std::string dc_split = "DC and Nyquist bins split half/half between the positive and negative parts";
    std::string coinciding_times = "coinciding times symmetrized over equal-time permutations";
    std::string causal_region = "forbidden region: max(output times) < max(input times)";
    std::string kernel = "zero-padded DFT Toeplitz kernel, pad factor from the grid";
    std::string units = "hbar and mass from the config, natural units by default";
};

// ---- CSV

// Columns t, re, im.
void write_signal_csv(const std::string& path, const Signal& s);
// Reads t, re, im rows; the grid is rebuilt from the times (uniform spacing required).
Signal read_signal_csv(const std::string& path, int pad_factor = 4);

// One row per tuple: leg indices, leg times, re, im, region (allowed | forbidden).
// `outputs` is the number of output legs (region label only, -1 to omit).
void write_tensor_csv(const std::string& path, const CorrelationTensor& t, int outputs = -1);
// Rank-2 tensor as a plot-ready surface: first column t_out, header row t_in, real part.
void write_surface_csv(const std::string& path, const CorrelationTensor& t);
// Kernel matrix, real and imaginary parts as two blocks separated by a blank line.
void write_kernel_csv(const std::string& path, const SplitKernel& k);

// Trend table: header then one row per sweep value.
void write_table_csv(const std::string& path, const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows);
void write_table_json(const std::string& path, const std::string& parameter, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

// ---- binary blobs
// Little-endian, versioned header: magic "TNRB", format version, kind, grid (t0, dt,
// count, pad), operator dimension, component count. Readers reject other versions.

inline constexpr unsigned kBlobVersion = 1;

void write_tensor_blob(const std::string& path, const CorrelationTensor& t);
CorrelationTensor read_tensor_blob(const std::string& path);
void write_trajectory_blob(const std::string& path, const PropagatorTrajectory& p);
PropagatorTrajectory read_trajectory_blob(const std::string& path);
void write_heisenberg_blob(const std::string& path, const HeisenbergTrajectory& h);
HeisenbergTrajectory read_heisenberg_blob(const std::string& path);

// ---- JSON

// Every descriptor of D^(m;n) (neutral) with sign, hbar power and canonical form.
std::string term_audit_json(int m, int n);
// Charged D^(m,n;k,l) under the by-side and display rules, with the display entries that
// differ from the side rule flagged for review.
std::string charged_term_audit_json(int m, int n, int k, int l);

// Report: scenario settings, convention block and check records. Runtimes are left out so
// that identical inputs give identical bytes; they go to timing_json instead.
std::string report_json(const ScenarioConfig& cfg, const std::vector<CheckReport>& checks,
                        const std::vector<std::string>& artifacts = {});
std::string timing_json(const std::vector<CheckReport>& checks, double total_seconds);

void write_text(const std::string& path, const std::string& text);

}  // namespace tnresp
