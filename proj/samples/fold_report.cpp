// Walks one parameter set through the library: thresholds, the regime and
// its equilibria, the fold in m, and how total abundance responds to m.
//
//   fold_report [m e h delta s]     (defaults: 0.5 0.1 0.9 0.1 0.9)

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "patchdyn/patchdyn.hpp"

using namespace patchdyn;

int main(int argc, char** argv) {
  OdeParams p{0.5, 0.1, 0.9, 0.1, 0.9};
  if (argc == 6) p = {std::atof(argv[1]), std::atof(argv[2]), std::atof(argv[3]), std::atof(argv[4]),
                      std::atof(argv[5])};
  try {
    validate(p, Validation::Strict);
    const RegimeReport r = regime_report(p);
    std::cout << std::setprecision(6) << "B = " << r.derived.B << ", m0 = " << r.derived.m0;
    if (r.derived.mstar) std::cout << ", m* = " << *r.derived.mstar;
    std::cout << "\ncase " << to_string(r.regime) << ", verdict " << to_string(r.verdict) << "\n";
    for (const auto& eq : r.equilibria) {
      std::cout << "  " << to_string(eq.kind) << " (" << eq.u << ", " << eq.v << ")  " << describe(eq.stability)
                << "\n";
    }

    if (r.derived.mstar) {
      const SotomayorReport s = sotomayor_at_fold(p);
      std::cout << "fold at m = " << s.m << ": beta.F_m = " << s.eta_fm << ", beta.D2F = " << s.eta_d2
                << (s.certified ? " (saddle-node)" : " (not certified)") << "\n";
    }
    if (r.verdict == GlobalVerdict::E1GAS) {
      const SensitivityReport a = abundance_sensitivity(p);
      std::cout << "total abundance " << a.total << ", dT/dm = " << a.dT_dm << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << ex.what() << "\n";
    return 2;
  }
}
