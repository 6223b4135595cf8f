#pragma once

// Binary model file, version-tagged and byte-stable for fixed inputs.
// Layout (little-endian throughout, doubles as IEEE-754 bits):
//
//   magic "MLPFORST" | u32 version | u64 N | u64 C
//   label column name, N feature names, C class names   (u64 length + bytes)
//   standardizer means[N], stddevs[N]
//   u8 whitened; if 1: means[N], eigenvalues[N], eigenvectors[N*N], floor
//   priors_equiprobable[N]; u8 has_weighted; if 1: priors_weighted[N]
//   u64 member count; per member: u64 d_in, u64 hidden, u64 classes,
//                                 w1, b1, w2, b2
//
// The standardizer fitted on the training rows travels with the forest so a
// saved model can be applied to raw feature files as-is.

#include "mlpforest/data.hpp"
#include "mlpforest/forest.hpp"

#include <string>
#include <vector>

namespace mlpforest {

struct ModelFile {
    Standardizer standardizer;
    ForestModel forest;
    std::string label_column;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
};

inline constexpr std::uint32_t kModelFileVersion = 1;

void save_model(const ModelFile& model, const std::string& path);

ModelFile load_model(const std::string& path);

} // namespace mlpforest
