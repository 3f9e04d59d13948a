#pragma once

#include <span>
#include <vector>

namespace recon {

// Run-length calculation for estimating the q-quantile of a scalar chain to
// within +/- r with probability s.
struct RunLength {
  long thin = 1;           // k at which the binarized chain looks first-order Markov
  long burn_in = 0;        // M
  long total = 0;          // N, burn-in included
  long nmin = 0;           // run length for an independent chain
  double dependence = 0;   // I = N / Nmin
};

// Nmin = ceil(q (1 - q) (Phi^{-1}((s + 1) / 2) / r)^2), independent of the chain.
long raftery_lewis_nmin(double q, double r, double s);

// The chain is binarized at its empirical q-quantile; the thinning k grows
// until a first-order Markov model beats second order by BIC; M and N then
// come from the two-state transition matrix (eps = 0.001). Throws
// DomainError for bad (q, r, s) and Error if the chain is shorter than Nmin.
RunLength raftery_lewis(std::span<const double> chain, double q, double r, double s,
                        double eps = 0.001);

// Potential scale reduction factor over chains truncated to a common length.
// Throws Error with fewer than two chains or fewer than two draws each.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

}  // namespace recon
