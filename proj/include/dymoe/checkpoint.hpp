#pragma once

#include <string>

#include "dymoe/model.hpp"

namespace dymoe {

// Versioned little-endian binary snapshot of a model: a magic tag, the six
// structural sizes, then every parameter tensor in declaration order.
// Loading rebuilds the exact structure (including which parts are frozen)
// and restores every value bit for bit.
void save_model(const ModelState& model, const std::string& path);
ModelState load_model(const std::string& path);

}  // namespace dymoe
