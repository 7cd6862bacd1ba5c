#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hearth/engine.hpp"
#include "hearth/error.hpp"
#include "hearth/rule_parser.hpp"

namespace hearth::tools {

struct Bundle {
    HomeConfig home;
    SecurityConfig security;
    PolicyConfig policy;
    RuleScript script;
};

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    out << text;
}

/// Loads the home, security, policy and (optional) script files. Script
/// lines that fail to parse are reported on stderr and left out.
inline Bundle load_bundle(const std::string& config, const std::string& security, const std::string& policy,
                          const std::string& script)
{
    Bundle b{load_home_config_file(config), {}, {}, {}};
    b.security = SecurityConfig::from_file(security, &b.home);
    b.policy = PolicyConfig::from_file(policy);
    if (!script.empty()) {
        auto loaded = load_script_file(script, b.home);
        for (const auto& d : loaded.diagnostics)
            std::cerr << script << ": " << to_string(d.severity) << " " << d.code << " (" << d.rule_id
                      << "): " << d.message << "\n";
        b.script = std::move(loaded.script);
    }
    return b;
}

inline int fail(const Error& e)
{
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
}

} // namespace hearth::tools
