#include "rumour/stream_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rumour {

namespace {

using nlohmann::json;

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

LoadedPatterns load_patterns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pattern file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("pattern file " + path + ": parse error at line " +
                          std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
    }

    LoadedPatterns out;
    try {
        if (!doc.contains("modalities") || !doc["modalities"].is_array())
            throw ConfigError("pattern file: missing 'modalities' array");
        for (const auto& m : doc["modalities"]) {
            const auto name = m.get<std::string>();
            if (out.modalities.find(name))
                throw ConfigError("pattern file: duplicate modality '" + name + "'");
            out.modalities.intern(name);
        }
        if (out.modalities.size() == 0)
            throw ConfigError("pattern file: no modalities declared");

        std::vector<RumourPattern> patterns;
        for (const auto& p : doc.at("patterns")) {
            const auto id = p.at("id").get<std::string>();
            std::vector<Modality> var_mods;
            std::unordered_map<std::string, VarId> var_index;
            for (const auto& v : p.at("variables")) {
                const auto vid = v.at("id").get<std::string>();
                const auto mod_name = v.at("modality").get<std::string>();
                auto mod = out.modalities.find(mod_name);
                if (!mod)
                    throw ConfigError("pattern '" + id + "': unknown modality '" + mod_name +
                                      "'");
                if (var_index.contains(vid))
                    throw ConfigError("pattern '" + id + "': duplicate variable '" + vid + "'");
                var_index.emplace(vid, static_cast<VarId>(var_mods.size()));
                var_mods.push_back(*mod);
            }
            std::vector<PatternEdge> edges;
            for (const auto& e : p.at("edges")) {
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError("pattern '" + id + "': edge must be a [from,to] pair");
                const auto from = e[0].get<std::string>();
                const auto to = e[1].get<std::string>();
                if (!var_index.contains(from) || !var_index.contains(to))
                    throw ConfigError("pattern '" + id + "': edge references unknown variable");
                edges.push_back(PatternEdge{var_index[from], var_index[to]});
            }
            patterns.emplace_back(id, std::move(var_mods), std::move(edges),
                                  out.modalities.size());
        }
        if (patterns.empty()) throw ConfigError("pattern file: no patterns declared");
        out.set = std::make_unique<PatternSet>(std::move(patterns), out.modalities);
    } catch (const json::exception& e) {
        throw ConfigError("pattern file " + path + ": " + e.what());
    } catch (const PatternError& e) {
        throw ConfigError("pattern file " + path + ": " + e.what());
    }
    return out;
}

std::vector<StreamElement> parse_stream(std::istream& in, const ModalityTable& modalities,
                                        EntityInterner& interner) {
    std::vector<StreamElement> out;
    std::string line;
    std::size_t line_no = 0;
    std::uint64_t last_t = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string u, v, mu, mv;
        if (!(ls >> u)) continue;  // blank or comment-only line
        long long t = -1;
        if (!(ls >> v >> mu >> mv >> t))
            throw StreamFormatError("expected 'u v mu mv t [label]'", line_no);
        if (t < 0) throw StreamFormatError("negative timestamp", line_no);
        int label = -1;
        std::string label_tok;
        if (ls >> label_tok) {
            if (label_tok == "0") label = 0;
            else if (label_tok == "1") label = 1;
            else throw StreamFormatError("label must be 0 or 1", line_no);
            std::string trailing;
            if (ls >> trailing) throw StreamFormatError("trailing fields", line_no);
        }

        auto m = modalities.find(mu);
        if (!m) throw StreamFormatError("unknown modality '" + mu + "'", line_no);
        auto m_prime = modalities.find(mv);
        if (!m_prime) throw StreamFormatError("unknown modality '" + mv + "'", line_no);

        StreamElement e;
        e.u = interner.intern(u);
        e.u_prime = interner.intern(v);
        e.m = *m;
        e.m_prime = *m_prime;
        e.t = static_cast<std::uint64_t>(t);
        if (!out.empty() && e.t < last_t)
            throw StreamFormatError("timestamps must be non-decreasing", line_no);
        last_t = e.t;
        if (label >= 0) e.rumour_label = label == 1;
        out.push_back(e);
    }
    return out;
}

std::vector<StreamElement> load_stream(const std::string& path, const ModalityTable& modalities,
                                       EntityInterner& interner) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stream file: " + path);
    return parse_stream(in, modalities, interner);
}

void write_stream(std::ostream& out, const std::vector<StreamElement>& elements,
                  const ModalityTable& modalities, const EntityInterner& interner) {
    for (const auto& e : elements) {
        out << interner.name(e.u) << ' ' << interner.name(e.u_prime) << ' '
            << modalities.name(e.m) << ' ' << modalities.name(e.m_prime) << ' ' << e.t;
        if (e.rumour_label) out << ' ' << (*e.rumour_label ? 1 : 0);
        out << '\n';
    }
}

void write_stream_file(const std::string& path, const std::vector<StreamElement>& elements,
                       const ModalityTable& modalities, const EntityInterner& interner) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write_stream(out, elements, modalities, interner);
}

}  // namespace rumour
