#pragma once

#include <string>

#include "dc2ac/network.hpp"

namespace dc2ac {

// Parses a MATPOWER case from source text. Accepts the standard mpc.baseMVA,
// mpc.bus, mpc.gen, mpc.branch and mpc.gencost matrices; quantities are
// converted to per-unit (angles to radians) on load. Generation costs remain
// MW-based. Throws MalformedCase / UnsupportedCost / DanglingReference /
// NoRefBus on invalid input. The returned case is finalized.
NetworkCase parse_matpower(const std::string& text, const std::string& name_hint = "");

// Reads the file and parses it; throws IoFailure if the file cannot be read.
NetworkCase load_matpower_file(const std::string& path);

}  // namespace dc2ac
