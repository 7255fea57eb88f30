#pragma once

#include <string>

#include "cote/model_io.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(COTE_FIXTURES) + "/" + name; }
inline std::string text(const std::string& name) { return cote::read_text_file(path(name)); }

}  // namespace fixtures
