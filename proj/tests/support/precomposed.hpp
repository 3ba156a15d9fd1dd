#pragma once

// Model A with the immediate weakening folded into the timed transitions by
// hand, so it has no vanishing states at all:
//  - e_failure_normal from (i_working, e_working) lands directly in
//    (i_weakened, partial_e_outage);
//  - i_restoration during an e-outage lands directly in i_weakened;
//  - e_restoration_fast is dropped (its source states are all vanishing);
//  - i_unweaken is dropped (i_weakened never meets a working grid);
// everything else is copied verbatim.

#include "infradep/builtin.hpp"

namespace oracle {

inline infradep::Model precomposed_accidental(const infradep::ModelParams& p = {}) {
  using namespace infradep;
  using namespace infradep::guards;
  using A = Assignment;
  Model src = accidental_model(p);
  Model m;
  m.name = "accidental_precomposed";
  m.parameters = src.parameters;
  m.variables = src.variables;
  m.labels = src.labels;
  for (const auto& t : src.transitions) {
    if (t.name == "i_weaken" || t.name == "i_unweaken" || t.name == "e_restoration_fast") continue;
    if (t.name == "e_failure_normal") {
      m.transitions.push_back(Transition::timed("e_failure_normal_weakens", t.rate,
                                                all_of({eq("info", "i_working"), eq("elec", "e_working")}),
                                                {A::set("info", "i_weakened"), A::set("elec", "partial_e_outage")}));
      m.transitions.push_back(Transition::timed("e_failure_normal_weakened", t.rate,
                                                all_of({eq("info", "i_weakened"), eq("elec", "e_working")}),
                                                {A::set("elec", "partial_e_outage")}));
      continue;
    }
    if (t.name == "i_restoration") {
      m.transitions.push_back(Transition::timed("i_restoration_powered", t.rate,
                                                all_of({eq("info", "partial_i_outage"), in("elec", {"e_working", "e_weakened"})}),
                                                {A::set("info", "i_working")}));
      m.transitions.push_back(Transition::timed("i_restoration_unpowered", t.rate,
                                                all_of({eq("info", "partial_i_outage"), in("elec", {"partial_e_outage", "e_lost"})}),
                                                {A::set("info", "i_weakened")}));
      continue;
    }
    m.transitions.push_back(t);
  }
  return m;
}

}  // namespace oracle
