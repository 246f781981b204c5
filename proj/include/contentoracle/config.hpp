#ifndef CONTENTORACLE_CONFIG_HPP
#define CONTENTORACLE_CONFIG_HPP

// Tool configuration. A JSON object, all keys optional:
//   {"mime_types": path, "signatures": path, "active_types": path,
//    "models": dir, "sidecar": path, "backend": "auto" | "xattr" | "sidecar"}
// Relative paths are taken relative to the config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "contentoracle/attribute_store.hpp"
#include "contentoracle/error.hpp"
#include "json.hpp"

#ifndef CONTENTORACLE_DATA_DIR
#define CONTENTORACLE_DATA_DIR "data"
#endif

namespace contentoracle
{

struct Config
{
    fs::path mime_types;
    fs::path signatures;
    fs::path active_types;
    fs::path models;
    fs::path sidecar;
    std::string backend = "auto";
    /// File the settings came from; empty for built-in defaults.
    fs::path source;

    static Config defaults()
    {
        const fs::path data = CONTENTORACLE_DATA_DIR;
        Config c;
        c.mime_types = data / "mime.types";
        c.signatures = data / "signatures.db";
        c.active_types = data / "active_types.txt";
        c.models = data / "models";
        c.sidecar = default_state_dir() / "sidecar.ndjson";
        return c;
    }

    static fs::path default_state_dir()
    {
        if (const char* xdg = std::getenv("XDG_STATE_HOME"); xdg && *xdg) {
            return fs::path(xdg) / "contentoracle";
        }
        if (const char* home = std::getenv("HOME"); home && *home) {
            return fs::path(home) / ".local" / "state" / "contentoracle";
        }
        return fs::temp_directory_path() / "contentoracle";
    }
};

/// Platform config location, whether or not the file exists.
inline std::optional<fs::path> platform_config_path()
{
    if (const char* xdg = std::getenv("XDG_CONFIG_HOME"); xdg && *xdg) {
        return fs::path(xdg) / "contentoracle" / "config.json";
    }
    if (const char* home = std::getenv("HOME"); home && *home) {
        return fs::path(home) / ".config" / "contentoracle" / "config.json";
    }
    return std::nullopt;
}

/// Applies the settings in `file` on top of the defaults. Throws ConfigError.
inline Config load_config_file(const fs::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot read config file " + file.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config file " + file.string() + " must hold a JSON object");
    }

    Config c = Config::defaults();
    c.source = file;
    const fs::path base = file.parent_path();
    auto path_key = [&](const char* key, fs::path& target) {
        const auto it = j.find(key);
        if (it == j.end()) {
            return;
        }
        if (!it->is_string()) {
            throw ConfigError(std::string("config key '") + key + "' must be a string");
        }
        const fs::path p = it->get<std::string>();
        target = p.is_absolute() ? p : base / p;
    };
    for (const auto& [key, value] : j.items()) {
        if (key != "mime_types" && key != "signatures" && key != "active_types" &&
            key != "models" && key != "sidecar" && key != "backend") {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    path_key("mime_types", c.mime_types);
    path_key("signatures", c.signatures);
    path_key("active_types", c.active_types);
    path_key("models", c.models);
    path_key("sidecar", c.sidecar);
    if (const auto it = j.find("backend"); it != j.end()) {
        if (!it->is_string()) {
            throw ConfigError("config key 'backend' must be a string");
        }
        c.backend = it->get<std::string>();
        if (c.backend != "auto" && c.backend != "xattr" && c.backend != "sidecar") {
            throw ConfigError("backend must be auto, xattr or sidecar");
        }
    }
    return c;
}

/// Search order: explicit flag, CONTENTORACLE_CONFIG, the platform config
/// directory, built-in defaults. An explicitly named file must exist.
inline Config resolve_config(const std::optional<fs::path>& flag)
{
    if (flag) {
        return load_config_file(*flag);
    }
    if (const char* env = std::getenv("CONTENTORACLE_CONFIG"); env && *env) {
        return load_config_file(env);
    }
    if (const auto platform = platform_config_path()) {
        std::error_code ec;
        if (fs::exists(*platform, ec)) {
            return load_config_file(*platform);
        }
    }
    return Config::defaults();
}

/// Opens the attribute store the config selects. The sidecar's directory is
/// created on demand.
inline AttributeStore open_store(const Config& c, Clock clock = now_seconds)
{
    std::error_code ec;
    fs::create_directories(c.sidecar.parent_path(), ec);
    if (c.backend == "sidecar") {
        return AttributeStore::sidecar(c.sidecar, clock);
    }
    if (c.backend == "xattr") {
        return AttributeStore::xattr(c.sidecar, clock);
    }
    return AttributeStore::automatic(c.sidecar, clock);
}

} // namespace contentoracle

#endif // CONTENTORACLE_CONFIG_HPP
