#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ipk {

// Flat key-value config file, TOML syntax: `key = value` lines, `#` comments,
// numbers, booleans, quoted strings, and arrays of numbers. Section headers
// are ignored (keys stay flat).
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key) const;
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;
    std::string text(const std::string& key) const;
    std::string text_or(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<std::int64_t> integers(const std::string& key) const;

    // original text of every parsed line, echoed into reports for provenance
    const std::string& source() const { return source_; }

  private:
    struct Value {
        enum class Kind { Number, Bool, Text, Array } kind;
        double num = 0.0;
        bool flag = false;
        std::string str;
        std::vector<double> array;
    };
    const Value& at(const std::string& key) const;
    std::map<std::string, Value> values_;
    std::string source_;
};

}  // namespace ipk
