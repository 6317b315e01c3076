#pragma once

#include <string>

#include "jeit/labels.hpp"
#include "jeit/tensor.hpp"

namespace jeit {

// Audio features with their factorized transcript.
struct PairedExample {
  std::string id;
  Tensor features;  // T×F
  LabelBundle bundle;
};

// Text-only example; its pause channel ends in ⟨eos⟩.
struct UnpairedExample {
  std::string id;
  LabelBundle bundle;
};

}  // namespace jeit
