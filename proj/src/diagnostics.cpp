#include "recon/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "recon/error.hpp"
#include "recon/priors.hpp"
#include "recon/stats.hpp"

namespace recon {

long raftery_lewis_nmin(double q, double r, double s) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("q must lie in (0, 1)");
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0, 1)");
  if (!(r > 0.0)) throw DomainError("r must be > 0");
  const double phi = standard_normal_quantile((s + 1.0) / 2.0);
  return static_cast<long>(std::ceil(q * (1.0 - q) * (phi / r) * (phi / r)));
}

namespace {

std::vector<int> thinned(const std::vector<int>& z, long k) {
  std::vector<int> out;
  for (std::size_t i = 0; i < z.size(); i += static_cast<std::size_t>(k)) out.push_back(z[i]);
  return out;
}

// BIC of the second-order vs first-order Markov model for a binary chain.
double second_order_bic(const std::vector<int>& z) {
  const std::size_t n = z.size();
  std::array<std::array<std::array<double, 2>, 2>, 2> t{};
  for (std::size_t i = 2; i < n; ++i) t[z[i - 2]][z[i - 1]][z[i]] += 1.0;
  double g2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        if (t[a][b][c] == 0.0) continue;
        const double row = t[a][b][0] + t[a][b][1];
        const double col = t[0][b][c] + t[1][b][c];
        const double mid = t[0][b][0] + t[0][b][1] + t[1][b][0] + t[1][b][1];
        const double fitted = row * col / mid;
        g2 += 2.0 * t[a][b][c] * std::log(t[a][b][c] / fitted);
      }
  return g2 - 2.0 * std::log(static_cast<double>(n) - 2.0);
}

}  // namespace

RunLength raftery_lewis(std::span<const double> chain, double q, double r, double s, double eps) {
  RunLength out;
  out.nmin = raftery_lewis_nmin(q, r, s);
  if (static_cast<long>(chain.size()) < out.nmin)
    throw Error("chain of length " + std::to_string(chain.size()) +
                " is shorter than the minimum run length " + std::to_string(out.nmin));

  const double cut = quantile(std::vector<double>(chain.begin(), chain.end()), q);
  std::vector<int> z(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) z[i] = chain[i] <= cut ? 1 : 0;

  long k = 0;
  std::vector<int> zk;
  double bic = 1.0;
  while (bic >= 0.0) {
    ++k;
    zk = thinned(z, k);
    if (zk.size() < 3) throw Error("chain too short to estimate the transition matrix");
    bic = second_order_bic(zk);
  }

  std::array<std::array<double, 2>, 2> tr{};
  for (std::size_t i = 1; i < zk.size(); ++i) tr[zk[i - 1]][zk[i]] += 1.0;
  if (tr[0][0] + tr[0][1] == 0.0 || tr[1][0] + tr[1][1] == 0.0)
    throw Error("chain too short to estimate the transition matrix");
  const double alpha = tr[0][1] / (tr[0][0] + tr[0][1]);
  const double beta = tr[1][0] / (tr[1][0] + tr[1][1]);
  if (alpha + beta == 0.0) throw Error("binarized chain never changes state");

  const double phi = standard_normal_quantile((s + 1.0) / 2.0);
  const double lambda = 1.0 - alpha - beta;
  double burn = 0.0;
  if (std::fabs(lambda) > 0.0 && std::fabs(lambda) < 1.0)
    burn = std::log(eps * (alpha + beta) / std::max(alpha, beta)) / std::log(std::fabs(lambda));
  out.thin = k;
  out.burn_in = static_cast<long>(std::max(0.0, std::ceil(burn))) * k;
  const double prec = (2.0 - alpha - beta) * alpha * beta * phi * phi /
                      (std::pow(alpha + beta, 3.0) * r * r);
  out.total = out.burn_in + static_cast<long>(std::ceil(prec * static_cast<double>(k)));
  out.dependence = static_cast<double>(out.total) / static_cast<double>(out.nmin);
  return out;
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw Error("Gelman-Rubin needs at least two chains");
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 2) throw Error("Gelman-Rubin needs at least two draws per chain");
  const double m = static_cast<double>(chains.size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    std::span<const double> head(c.data(), n);
    means.push_back(mean(head));
    within += sample_variance(head);
  }
  within /= m;
  const double between = static_cast<double>(n) * sample_variance(means);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double pooled = (nd - 1.0) / nd * within + between / nd;
  return std::sqrt(pooled / within);
}

}  // namespace recon
