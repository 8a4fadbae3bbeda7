// Copyright 2026 The qcrowd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qcrowd/analysis.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace qcrowd {

inline constexpr const char* kResultsHeader =
    "seed,quality_gap,solver_iters,solver_obj,feas_box,feas_row,feas_nuc,round_iters,accepted,opnorm";

inline constexpr const char* kSummaryHeader =
    "k,k0,trials,gap_median,gap_mean,gap_ci_lo,gap_ci_hi,gap_q10,gap_q90,opnorm_per_sqrt_k_median,"
    "deviation_median,deviation_bound,deviation_violation_rate,converged_fraction,accepted_fraction";

/// 12 significant digits, locale independent.
inline std::string fmt_real(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_results_csv(std::ostream& out, const std::vector<TrialResult>& trials) {
  out << kResultsHeader << '\n';
  for (const auto& t : trials) {
    out << t.seed << ',' << fmt_real(t.quality_gap) << ',' << t.solver.iterations << ','
        << fmt_real(t.solver.objective) << ',' << fmt_real(t.solver.residuals.box) << ','
        << fmt_real(t.solver.residuals.row_sum) << ',' << fmt_real(t.solver.residuals.nuclear) << ','
        << t.round_iters << ',' << (t.accepted ? 1 : 0) << ',' << fmt_real(t.opnorm) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << r.k0 << ',' << r.trials << ',' << fmt_real(r.gap.median) << ','
        << fmt_real(r.gap.mean) << ',' << fmt_real(r.gap.ci_lo) << ',' << fmt_real(r.gap.ci_hi) << ','
        << fmt_real(r.gap.q10) << ',' << fmt_real(r.gap.q90) << ','
        << fmt_real(r.opnorm_per_sqrt_k.median) << ',' << fmt_real(r.deviation.median) << ','
        << fmt_real(r.deviation_bound) << ',' << fmt_real(r.deviation_violation_rate) << ','
        << fmt_real(r.converged_fraction) << ',' << fmt_real(r.accepted_fraction) << '\n';
  }
}

}  // namespace qcrowd
