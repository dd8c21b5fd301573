#pragma once

#include <dualact/optcore.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace dualact::app {

inline std::size_t edit_distance(const std::string& a, const std::string& b)
{
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline std::string suggestion(const std::string& word, const std::set<std::string>& known)
{
    std::string best;
    std::size_t bd = std::string::npos;
    for (const auto& k : known) {
        std::size_t d = edit_distance(word, k);
        if (d < bd)
            bd = d, best = k;
    }
    if (best.empty() || bd > std::max<std::size_t>(2, word.size() / 3))
        return {};
    return best;
}

// INI configuration. Every lookup declares its key as known; `reject_unknown`
// then fails on any key or section that no lookup asked for.
class Config {
public:
    static Config load(const std::filesystem::path& path)
    {
        if (!std::filesystem::exists(path))
            throw ConfigError("config file not found: " + path.string());
        Config c;
        try {
            boost::property_tree::ini_parser::read_ini(path.string(), c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError("cannot parse config: " + std::string(e.what()));
        }
        return c;
    }

    static Config parse(const std::string& text)
    {
        Config c;
        std::istringstream in(text);
        try {
            boost::property_tree::ini_parser::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError("cannot parse config: " + std::string(e.what()));
        }
        return c;
    }

    bool has(const std::string& section) const
    {
        known_sections_.insert(section);
        return tree_.get_child_optional(section).has_value();
    }

    double real(const std::string& section, const std::string& key, double fallback) const
    {
        auto s = raw(section, key);
        if (!s)
            return fallback;
        try {
            std::size_t pos = 0;
            double v = std::stod(*s, &pos);
            if (pos != s->size() || !std::isfinite(v))
                throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(where(section, key) + ": expected a number, got '" + *s + "'");
        }
    }

    int integer(const std::string& section, const std::string& key, int fallback) const
    {
        auto s = raw(section, key);
        if (!s)
            return fallback;
        try {
            std::size_t pos = 0;
            long v = std::stol(*s, &pos);
            if (pos != s->size() || v < INT32_MIN || v > INT32_MAX)
                throw std::invalid_argument("trailing");
            return static_cast<int>(v);
        } catch (const std::exception&) {
            throw ConfigError(where(section, key) + ": expected an integer, got '" + *s + "'");
        }
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const
    {
        auto s = raw(section, key);
        if (!s)
            return fallback;
        if (*s == "true" || *s == "1")
            return true;
        if (*s == "false" || *s == "0")
            return false;
        throw ConfigError(where(section, key) + ": expected true or false, got '" + *s + "'");
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        auto s = raw(section, key);
        return s ? *s : fallback;
    }

    std::string choice(const std::string& section, const std::string& key, const std::string& fallback,
                       const std::set<std::string>& allowed) const
    {
        std::string v = text(section, key, fallback);
        if (!allowed.count(v)) {
            std::string msg = where(section, key) + ": '" + v + "' is not one of {";
            for (auto it = allowed.begin(); it != allowed.end(); ++it)
                msg += (it == allowed.begin() ? "" : ", ") + *it;
            msg += "}";
            if (auto s = suggestion(v, allowed); !s.empty())
                msg += "; did you mean '" + s + "'?";
            throw ConfigError(msg);
        }
        return v;
    }

    // Comma- or space-separated numbers; empty when absent.
    std::vector<double> reals(const std::string& section, const std::string& key) const
    {
        auto s = raw(section, key);
        std::vector<double> out;
        if (!s)
            return out;
        std::string t = *s;
        std::replace(t.begin(), t.end(), ',', ' ');
        std::istringstream in(t);
        std::string tok;
        while (in >> tok) {
            try {
                std::size_t pos = 0;
                double v = std::stod(tok, &pos);
                if (pos != tok.size() || !std::isfinite(v))
                    throw std::invalid_argument("trailing");
                out.push_back(v);
            } catch (const std::exception&) {
                throw ConfigError(where(section, key) + ": expected numbers, got '" + tok + "'");
            }
        }
        return out;
    }

    void reject_unknown() const
    {
        for (const auto& [section, child] : tree_) {
            if (child.empty() && !child.data().empty())
                throw ConfigError("key '" + section + "' must appear inside a [section]");
            if (!known_sections_.count(section)) {
                std::string msg = "section [" + section + "] is not used by this subcommand";
                if (auto s = suggestion(section, known_sections_); !s.empty())
                    msg += "; did you mean [" + s + "]?";
                throw ConfigError(msg);
            }
            const auto& keys = known_keys_[section];
            for (const auto& [key, value] : child) {
                if (keys.count(key))
                    continue;
                std::string msg = "unknown key '" + key + "' in [" + section + "]";
                if (auto s = suggestion(key, keys); !s.empty())
                    msg += "; did you mean '" + s + "'?";
                throw ConfigError(msg);
            }
        }
    }

    // Sections present in the file.
    std::vector<std::string> sections() const
    {
        std::vector<std::string> out;
        for (const auto& [name, child] : tree_)
            out.push_back(name);
        return out;
    }

private:
    static std::string where(const std::string& section, const std::string& key)
    {
        return "[" + section + "] " + key;
    }

    std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        known_sections_.insert(section);
        known_keys_[section].insert(key);
        auto child = tree_.get_child_optional(section);
        if (!child)
            return std::nullopt;
        auto v = child->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
        if (!v)
            return std::nullopt;
        return *v;
    }

    boost::property_tree::ptree tree_;
    mutable std::set<std::string> known_sections_;
    mutable std::map<std::string, std::set<std::string>> known_keys_;
};

} // namespace dualact::app
