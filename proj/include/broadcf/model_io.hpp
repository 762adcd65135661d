#pragma once

#include "broadcf/eval.hpp"

#include <string>

namespace broadcf {

// Single-file binary container (magic "BCFM", versioned, little-endian)
// holding the hyperparameters, seed, random layers, trained output weights,
// the train rating matrix, and both raw-id maps. The neighbor index is not
// stored; it is rebuilt deterministically on load. Writing the same bundle
// twice produces byte-identical files.
void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path, int threads = 0);

} // namespace broadcf
