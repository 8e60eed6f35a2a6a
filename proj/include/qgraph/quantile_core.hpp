#pragma once

// Check loss, asymmetric Laplace mixture constants and the order-1/2
// generalized inverse Gaussian ("tilted inverse Gaussian") used for the
// latent scales of the mixture representation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qgraph/random.hpp"

namespace qgraph {

inline constexpr double kLambdaFloor = 1e-10;

namespace detail {
template <typename Real>
void require_probability(Real tau, const char* what) {
  if (!(tau > Real(0) && tau < Real(1)))
    throw std::domain_error(std::string(what) + ": tau must lie in (0, 1), got " +
                            std::to_string(static_cast<double>(tau)));
}
template <typename Real>
void require_positive(Real x, const char* what) {
  if (!(x > Real(0)))
    throw std::domain_error(std::string(what) + " must be positive, got " +
                            std::to_string(static_cast<double>(x)));
}
}  // namespace detail

template <typename Real>
Real check_loss(Real z, Real tau) {
  detail::require_probability(tau, "check_loss");
  return z >= Real(0) ? z * tau : -(Real(1) - tau) * z;
}

template <typename Real>
struct MixtureConstants {
  Real tau;
  Real xi1;  // (1 - 2 tau) / (tau (1 - tau))
  Real xi2;  // sqrt(2 / (tau (1 - tau)))
};

template <typename Real>
MixtureConstants<Real> mixture_constants(Real tau) {
  detail::require_probability(tau, "mixture_constants");
  const Real q = tau * (Real(1) - tau);
  return {tau, (Real(1) - Real(2) * tau) / q, std::sqrt(Real(2) / q)};
}

/// log of t tau (1-tau) exp(-t rho_tau(u)).
template <typename Real>
Real ald_log_density(Real u, Real tau, Real t) {
  detail::require_positive(t, "ald_log_density: t");
  return std::log(t) + std::log(tau) + std::log1p(-tau) - t * check_loss(u, tau);
}

/// Draw from the asymmetric Laplace law through its normal-exponential mixture:
/// v ~ Exp(rate t), z ~ N(0,1), u = xi1 v + xi2 sqrt(v / t) z.
template <typename Real, typename Gen>
Real sample_ald(Real tau, Real t, Gen& g) {
  detail::require_positive(t, "sample_ald: t");
  const auto c = mixture_constants(tau);
  const Real v = static_cast<Real>(draw::exponential(g, static_cast<double>(t)));
  const Real z = static_cast<Real>(draw::normal(g));
  return c.xi1 * v + c.xi2 * std::sqrt(v / t) * z;
}

template <typename Real>
Real inverse_gaussian_log_density(Real v, Real mu, Real lambda) {
  detail::require_positive(v, "inverse_gaussian_log_density: v");
  detail::require_positive(mu, "inverse_gaussian_log_density: mu");
  detail::require_positive(lambda, "inverse_gaussian_log_density: lambda");
  const Real d = v - mu;
  return Real(0.5) * (std::log(lambda) - std::log(Real(2) * std::numbers::pi_v<Real>) -
                      Real(3) * std::log(v)) -
         lambda * d * d / (Real(2) * mu * mu * v);
}

/// Inverse Gaussian draw (Michael, Schucany and Haas), with the smaller root
/// written in a cancellation-free form.
template <typename Real, typename Gen>
Real sample_inverse_gaussian(Real mu, Real lambda, Gen& g) {
  detail::require_positive(mu, "sample_inverse_gaussian: mu");
  detail::require_positive(lambda, "sample_inverse_gaussian: lambda");
  const Real z = static_cast<Real>(draw::normal(g));
  const Real a = mu * z * z / lambda;
  const Real x = mu / (Real(1) + Real(0.5) * a + std::sqrt(a * (Real(1) + Real(0.25) * a)));
  if (static_cast<Real>(draw::uniform(g)) * (mu + x) <= mu) return x;
  return mu * mu / x;
}

/// Parameters of the density proportional to v * IG(v; mu, lambda), which is
/// GIG(1/2, chi = lambda, psi = lambda / mu^2).
template <typename Real>
struct TiltedIGParams {
  Real lambda;
  Real mu;

  /// Build from the coefficients of 1/v (lambda) and of v (psi) in the
  /// exponent, so mu = sqrt(lambda / psi). lambda is clamped at the floor.
  static TiltedIGParams from_coefficients(Real lambda, Real psi) {
    detail::require_positive(psi, "TiltedIGParams: psi");
    const Real l = std::max(lambda, Real(kLambdaFloor));
    return {l, std::sqrt(l / psi)};
  }

  Real chi() const { return lambda; }
  Real psi() const { return lambda / (mu * mu); }
};

template <typename Real>
struct TiltedIGMoments {
  Real mean;          // E(v)
  Real mean_inverse;  // E(1/v)
};

/// Closed-form moments of GIG(1/2, chi, psi): with omega = sqrt(chi psi),
/// E(v) = sqrt(chi/psi) (1 + 1/omega) and E(1/v) = sqrt(psi/chi).
template <typename Real>
TiltedIGMoments<Real> tilted_ig_moments(const TiltedIGParams<Real>& p) {
  detail::require_positive(p.lambda, "tilted_ig_moments: lambda");
  detail::require_positive(p.mu, "tilted_ig_moments: mu");
  // sqrt(chi/psi) = mu, omega = lambda / mu.
  return {p.mu * (Real(1) + p.mu / p.lambda), Real(1) / p.mu};
}

enum class VSampler { exact, metropolis };

/// Metropolis acceptance probability for an inverse-Gaussian independence
/// proposal against the tilted target: min(1, proposed / current).
template <typename Real>
Real tilted_ig_acceptance(Real proposed, Real current) {
  return std::min(Real(1), proposed / current);
}

/// One draw for a latent scale. `exact` samples GIG(1/2, chi, psi) as the
/// reciprocal of an IG(1/mu, psi) variate; `metropolis` runs one
/// independence step from `current` with an IG(mu, lambda) proposal.
template <typename Real, typename Gen>
Real sample_tilted_ig(const TiltedIGParams<Real>& p, Real current, Gen& g,
                      VSampler method = VSampler::exact, bool* accepted = nullptr) {
  detail::require_positive(p.lambda, "sample_tilted_ig: lambda");
  detail::require_positive(p.mu, "sample_tilted_ig: mu");
  if (method == VSampler::exact) {
    if (accepted) *accepted = true;
    return Real(1) / sample_inverse_gaussian(Real(1) / p.mu, p.psi(), g);
  }
  detail::require_positive(current, "sample_tilted_ig: current v");
  const Real proposal = sample_inverse_gaussian(p.mu, p.lambda, g);
  const bool ok =
      static_cast<Real>(draw::uniform(g)) < tilted_ig_acceptance(proposal, current);
  if (accepted) *accepted = ok;
  return ok ? proposal : current;
}

}  // namespace qgraph
