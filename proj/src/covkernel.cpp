#include "krigcv/covkernel.hpp"

namespace krigcv {

void ParamBox::validate() const {
  auto check = [](const Interval& iv, const char* name) {
    if (!(iv.lo > 0) || !(iv.hi >= iv.lo) || !std::isfinite(iv.hi))
      throw std::invalid_argument(std::string("ParamBox: invalid ") + name +
                                  " interval, need 0 < lo <= hi < inf");
  };
  check(sigma2, "sigma2");
  check(ell, "ell");
}

}  // namespace krigcv
