#pragma once

#include <fraccurv/config.hpp>
#include <fraccurv/ifs.hpp>

namespace fraccurv::testing {

inline IFS bundled(const std::string& name, const std::map<std::string, std::string>& params = {}) {
    return load_ifs_config(bundled_config(name + ".cfg"), params).ifs;
}

inline IFS unit_segment() { return bundled("segment"); }
inline IFS sierpinski() { return bundled("sierpinski"); }
inline IFS modified_gasket() { return bundled("modified_gasket"); }

}  // namespace fraccurv::testing
