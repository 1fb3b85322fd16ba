#ifndef RUMOUR_STREAM_IO_HPP
#define RUMOUR_STREAM_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rumour/matcher.hpp"
#include "rumour/types.hpp"

namespace rumour {

class StreamFormatError : public std::runtime_error {
public:
    StreamFormatError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// String keys from stream files mapped to dense entity handles.
class EntityInterner {
public:
    EntityId intern(const std::string& key) {
        auto it = index_.find(key);
        if (it != index_.end()) return EntityId{it->second};
        std::uint64_t id = names_.size();
        names_.push_back(key);
        index_.emplace(key, id);
        return EntityId{id};
    }

    const std::string& name(EntityId e) const { return names_.at(e.value); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint64_t> index_;
};

struct LoadedPatterns {
    ModalityTable modalities;
    std::unique_ptr<PatternSet> set;
};

/// Pattern catalogue file: a JSON document declaring the modality universe
/// and the patterns. Malformed files raise ConfigError with a line number
/// where one is known.
///
/// {
///   "modalities": ["user", "tweet", ...],
///   "patterns": [
///     {"id": "p1",
///      "variables": [{"id": "T", "modality": "tweet"}, ...],
///      "edges": [["T", "U"], ...]}
///   ]
/// }
LoadedPatterns load_patterns(const std::string& path);

/// Stream files hold one element per line:
///   u v mu mv t [label]
/// whitespace separated; '#' starts a comment; blank lines are skipped.
/// t must be a non-negative integer and non-decreasing; label is 0 or 1.
std::vector<StreamElement> load_stream(const std::string& path, const ModalityTable& modalities,
                                       EntityInterner& interner);
std::vector<StreamElement> parse_stream(std::istream& in, const ModalityTable& modalities,
                                        EntityInterner& interner);

void write_stream(std::ostream& out, const std::vector<StreamElement>& elements,
                  const ModalityTable& modalities, const EntityInterner& interner);
void write_stream_file(const std::string& path, const std::vector<StreamElement>& elements,
                       const ModalityTable& modalities, const EntityInterner& interner);

}  // namespace rumour

#endif  // RUMOUR_STREAM_IO_HPP
