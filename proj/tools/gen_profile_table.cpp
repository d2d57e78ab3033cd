// Regenerates core/src/default_profile_data.inc from an exhaustive sweep.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "halo/characterizer.hpp"
#include "halo/netlist.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: halo_gen_profile_table <out.inc>\n";
    return 2;
  }
  const halo::GateNetlist netlist = halo::build_default_mac_netlist();
  const halo::WeightProfile p = halo::characterize(netlist, halo::SamplingSpec::exhaustive());

  std::ofstream out(argv[1]);
  out << "constexpr std::uint32_t kDefaultRawDelay[256] = {\n";
  for (int v = -128; v <= 127; ++v) {
    out << (v % 16 == 0 ? "    " : "") << p.worst_delay_ps(v) << ((v + 129) % 16 == 0 ? ",\n" : ", ");
  }
  out << "};\n\nconstexpr double kDefaultEnergy[256] = {\n";
  char buf[64];
  for (int v = -128; v <= 127; ++v) {
    std::snprintf(buf, sizeof buf, "%.17g", p.energy(v));
    out << (v % 4 == 0 ? "    " : "") << buf << ((v + 129) % 4 == 0 ? ",\n" : ", ");
  }
  out << "};\n";
  return out ? 0 : 1;
}
