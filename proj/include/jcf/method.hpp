#pragma once

#include <string>
#include <string_view>

#include "jcf/errors.hpp"

namespace jcf {

// Pooling formulations, from first order to shared-projector JCF.
enum class Method { Baseline, BP, BPCodebook, Factorized, Jcf, JcfShared };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Baseline: return "baseline";
    case Method::BP: return "bp";
    case Method::BPCodebook: return "bp_codebook";
    case Method::Factorized: return "factorized";
    case Method::Jcf: return "jcf";
    case Method::JcfShared: return "jcf_shared";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (Method m : {Method::Baseline, Method::BP, Method::BPCodebook, Method::Factorized, Method::Jcf,
                   Method::JcfShared}) {
    if (s == to_string(m)) return m;
  }
  throw InputError("unknown pooling method '" + std::string(s) + "'");
}

inline bool uses_codebook(Method m) {
  return m == Method::BPCodebook || m == Method::Jcf || m == Method::JcfShared;
}

}  // namespace jcf
