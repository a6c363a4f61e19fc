#pragma once

#include <functional>
#include <string>

#include "mdrelax/ivp.hpp"
#include "mdrelax/types.hpp"

namespace mdrelax {

enum class ReferenceKind { exact, numerical };

struct ReferenceSolution {
  ReferenceKind kind = ReferenceKind::exact;
  std::function<Vec(double)> eval;
  std::string method;
  double dt = 0.0;
  double richardson = 0.0;  // |w_dt(T) - w_dt/2(T)| at generation time
};

/// Exact solution wrapper for the oscillator.
ReferenceSolution oscillator_reference();

/// High-resolution background-RK run (HB-I2DRK8-4s, dt = T_end/20000),
/// cached as JSON under MDRELAX_CACHE_DIR (default ./refcache). A freshly
/// generated reference must pass the dt-halving self-consistency check to
/// 1e-12, otherwise ReferenceDivergence is thrown. Dense output between
/// samples by local degree-8 polynomial interpolation.
ReferenceSolution kepler_reference(double T_end);

/// Problem-appropriate reference: exact for the oscillator, cached
/// numerical for Kepler.
ReferenceSolution reference_for(const IVP& ivp, double T_end);

}  // namespace mdrelax
