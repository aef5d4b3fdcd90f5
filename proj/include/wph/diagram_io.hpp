#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wph/error.hpp"
#include "wph/persistence.hpp"

namespace wph {

/// Shortest round-trip-safe text for a double (%.17g).
inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One line per pair: "dim<TAB>birth<TAB>death<TAB>capped" with capped in {0, 1}.
inline std::string serialize_diagram(const PersistenceDiagram& diag) {
    std::string out;
    for (const auto& p : diag.pairs) {
        out += std::to_string(p.dim) + '\t' + format_real(p.birth) + '\t' + format_real(p.death) + '\t' +
               (p.essential_capped ? "1" : "0") + '\n';
    }
    return out;
}

inline PersistenceDiagram parse_diagram(const std::string& text) {
    PersistenceDiagram diag;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        PersistencePair p;
        int capped = 0;
        if (!(fields >> p.dim >> p.birth >> p.death >> capped) || (p.dim != 0 && p.dim != 1) ||
            (capped != 0 && capped != 1)) {
            throw InputError("malformed diagram line " + std::to_string(line_no) + ": '" + line + "'");
        }
        p.essential_capped = capped == 1;
        diag.pairs.push_back(p);
    }
    return diag;
}

struct DiagramProvenance {
    std::string source_file;
    std::string source_sha256;
    int persistence_height = 0;
    int persistence_width = 0;
    int max_side = 0;
    bool mask_applied = false;
    double h1_pct = 0.0;
    std::string h1_order;
};

inline nlohmann::ordered_json diagram_sidecar(const PersistenceDiagram& diag, const DiagramProvenance& prov) {
    nlohmann::ordered_json j;
    j["source_file"] = prov.source_file;
    j["source_sha256"] = prov.source_sha256;
    j["downsample"] = {{"max_side", prov.max_side}, {"height", prov.persistence_height}, {"width", prov.persistence_width}};
    j["mask_applied"] = prov.mask_applied;
    j["filters"] = {{"h0", "drop dominant bar"}, {"h1_pct", prov.h1_pct}, {"h1_order", prov.h1_order}};
    j["counts"] = {{"h0", diag.count(0)}, {"h1", diag.count(1)}};
    return j;
}

}  // namespace wph
