#pragma once

// Synthetic census extract reproducing the UK regional marginals used by the
// worked example: per region, the employed population and the number of
// science professionals (OCC 211) and technicians (OCC 311).

#include <array>
#include <cstdint>
#include <string>

#include "groupanon/microdata.hpp"

namespace groupanon::fixture {

inline constexpr std::size_t kRegions = 13;

inline const std::array<std::string, kRegions> kRegionCodes = {
    "11", "13", "14", "21", "22", "31", "33", "40", "51", "52", "60", "70", "80"};

inline constexpr std::array<std::int64_t, kRegions> kEmployed = {
    48591, 129808, 96152, 83085, 101891, 108120, 161395, 97312, 54861, 86726, 99890, 55286, 33409};

inline constexpr std::array<std::int64_t, kRegions> kScientists = {
    695, 1672, 1176, 1163, 1171, 1524, 2294, 1246, 422, 871, 1589, 927, 369};

// Columns PERSON, REGNUK, SEX, OCC. Scientists are spread evenly through
// each region's block and alternate between 211 and 311; everyone else
// cycles through a handful of non-science occupation codes.
Microfile census_regional();

// Spec selecting OCC in {211, 311} over the 13 regions with group totals as
// denominators and fallback occupation 999.
AttributeSpec census_regional_spec();

}  // namespace groupanon::fixture
