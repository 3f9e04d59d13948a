#pragma once

#include <span>
#include <vector>

namespace recon {

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7, the R default): h = (n - 1) p, x[floor h] + frac(h) *
// (x[floor h + 1] - x[floor h]). `sorted` must be ascending and nonempty.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);

double mean(std::span<const double> values);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> values);

}  // namespace recon
