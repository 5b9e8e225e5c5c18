#include "groupanon/fixture.hpp"

#include <cstdio>
#include <numeric>
#include <string_view>

namespace groupanon::fixture {

namespace {

constexpr std::array<std::string_view, 8> kOtherOccupations = {"111", "242", "413", "522",
                                                               "612", "713", "815", "921"};

}  // namespace

Microfile census_regional() {
  Microfile mf({"PERSON", "REGNUK", "SEX", "OCC"});
  mf.reserve(static_cast<std::size_t>(std::accumulate(kEmployed.begin(), kEmployed.end(), std::int64_t{0})));
  std::size_t person = 0;
  char id[16];
  for (std::size_t g = 0; g < kRegions; ++g) {
    const std::int64_t employed = kEmployed[g];
    const std::int64_t scientists = kScientists[g];
    std::int64_t placed = 0;
    for (std::int64_t k = 0; k < employed; ++k) {
      std::snprintf(id, sizeof id, "P%07zu", ++person);
      const bool scientist = (k + 1) * scientists / employed > k * scientists / employed;
      std::string_view occ;
      if (scientist) {
        occ = placed++ % 2 == 0 ? "211" : "311";
      } else {
        occ = kOtherOccupations[static_cast<std::size_t>(k) % kOtherOccupations.size()];
      }
      const std::array<std::string_view, 4> row = {id, kRegionCodes[g], person % 2 ? "1" : "2", occ};
      mf.add_record(std::span<const std::string_view>(row));
    }
  }
  return mf;
}

AttributeSpec census_regional_spec() {
  AttributeSpec spec;
  spec.vital_attributes = {"OCC"};
  spec.vital_combinations = {{"211"}, {"311"}};
  spec.parameter_attribute = "REGNUK";
  spec.parameter_values.assign(kRegionCodes.begin(), kRegionCodes.end());
  spec.fallback = {"999"};
  return spec;
}

}  // namespace groupanon::fixture
