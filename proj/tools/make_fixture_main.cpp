// Writes the synthetic census extract with the regional marginals of the
// worked example.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "groupanon/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic 13-region census microfile"};
  std::string output;
  app.add_option("-o,--output", output, "Destination CSV path")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    groupanon::write_microfile(groupanon::fixture::census_regional(), output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
