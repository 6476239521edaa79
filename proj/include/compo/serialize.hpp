#pragma once

#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "compo/gaussian.hpp"
#include "compo/networks.hpp"

namespace compo {

/// Hex-float rendering (%a): bit-exact round trip for finite doubles.
std::string to_hexfloat(double v);
double from_hexfloat(const std::string& s);

/// Plain-text network format: one header line (kind, dims, delta), then one
/// parameter per line in the fixed packing order. MLPs append batchnorm
/// running statistics after the trainable block.
void save_net(const Net& net, std::ostream& os);
std::unique_ptr<Net> load_net(std::istream& is);

/// Gaussian networks share the same format: centers (point-major), then
/// coefficients.
void save_gaussian(const GaussianNet& net, std::ostream& os);
GaussianNet load_gaussian(std::istream& is);

} // namespace compo
