#pragma once

// SDL layout shared by the ZTRAN xApps.
//
//   auth/cred/<ue>        registered credentials (ID store)
//   auth/token/<ue>       current token, issue frame, expiry
//   auth/state/<ue>       AuthState name
//   auth/usage/<ue>       served-rate accumulator since the last re-auth
//   auth/ran/<cell>/<e2>  "verified" once the RAN pair attested
//   profiles/<ue>         BehaviorProfile
//   intrusion/window/<ue> recent KPM reports
//   slices/table          full slice table and bindings
//   slices/binding/<ue>   slice id, kind and PRB count of the UE's binding
//
// Only xapp_slicing writes the "slices" namespace.

#include <string>

#include "ztran/core_model.hpp"

namespace ztran::sdl {

inline const std::string kAuth = "auth";
inline const std::string kProfiles = "profiles";
inline const std::string kIntrusion = "intrusion";
inline const std::string kSlices = "slices";

inline std::string ue_key(const std::string& prefix, UeId ue) { return prefix + "/" + to_string(ue); }
inline std::string ran_key(CellId cell, E2Id e2) {
  return "ran/" + std::to_string(cell.value) + "/" + std::to_string(e2.value);
}

}  // namespace ztran::sdl
