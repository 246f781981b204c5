// contentoracle: command-line front end.
//
// Exit status: 0 Allow, 1 Warn, 2 Deny for commands that reach a verdict;
// 0 for success otherwise. 64 usage, 74 I/O, 78 configuration, 70 anything
// else.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "contentoracle/browser_model.hpp"
#include "contentoracle/config.hpp"
#include "contentoracle/ingest.hpp"
#include "contentoracle/pipeline.hpp"
#include "contentoracle/report.hpp"

namespace co = contentoracle;

namespace
{

constexpr int kExitUsage = 64;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;
constexpr int kExitConfig = 78;

struct Options
{
    std::optional<std::string> config;
    std::optional<std::int64_t> now;
    bool pretty = false;
};

class UsageError : public co::Error
{
public:
    using co::Error::Error;
};

co::Clock make_clock(const Options& o)
{
    if (o.now) {
        const std::int64_t pinned = *o.now;
        return [pinned] { return pinned; };
    }
    return co::now_seconds;
}

void emit(const Options& o, const co::json& j)
{
    std::cout << (o.pretty ? j.dump(2, ' ', false, co::json::error_handler_t::replace)
                           : co::dump(j))
              << '\n';
}

co::MimeType parse_user_mime(const std::string& text, const char* flag)
{
    const auto m = co::try_parse_mime_type(text);
    if (!m) {
        throw UsageError(std::string(flag) + ": not a valid media type: " + text);
    }
    return *m;
}

co::Config load_config(const Options& o)
{
    return co::resolve_config(o.config ? std::optional<co::fs::path>(*o.config) : std::nullopt);
}

co::Databases load_databases(const co::Config& c)
{
    try {
        return co::load_databases(c.mime_types, c.signatures, c.active_types);
    } catch (const co::LineError& e) {
        throw co::ConfigError(std::string("bundled data is malformed: ") + e.what());
    } catch (const co::IoError& e) {
        throw co::ConfigError(std::string("cannot load data files: ") + e.what());
    }
}

/// Accepts a bundled model name ("firefox-like") or a path to a tree file.
co::DecisionTree load_model(const co::Config& c, const std::string& name_or_path)
{
    co::fs::path path = name_or_path;
    std::error_code ec;
    if (!co::fs::exists(path, ec)) {
        path = c.models / (name_or_path + ".tree");
    }
    std::ifstream in(path);
    if (!in) {
        throw co::IoError("no such model", name_or_path);
    }
    return co::load_tree(in, path.stem().string());
}

co::EvidenceOptions evidence_options(const std::optional<std::string>& declared, bool nosniff)
{
    co::EvidenceOptions options;
    if (declared) {
        options.declared_mime = parse_user_mime(*declared, "--declared");
    }
    options.nosniff = nosniff;
    return options;
}

std::vector<co::fs::path> list_files(const co::fs::path& dir)
{
    std::error_code ec;
    if (!co::fs::is_directory(dir, ec)) {
        throw co::IoError("not a directory", dir.string());
    }
    std::vector<co::fs::path> files;
    for (auto it = co::fs::recursive_directory_iterator(dir, ec);
         !ec && it != co::fs::recursive_directory_iterator(); it.increment(ec)) {
        if (it->is_regular_file(ec)) {
            files.push_back(it->path());
        }
    }
    if (ec) {
        throw co::IoError("cannot walk directory: " + ec.message(), dir.string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        const auto trimmed = co::detail::trim(item);
        if (!trimmed.empty()) {
            out.emplace_back(trimmed);
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cross-checks how a file's type is identified and flags disagreements."};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "Config file (JSON)");
    app.add_option("--now", o.now, "Pin the clock to this Unix time");
    app.add_flag("--pretty", o.pretty, "Indent JSON output");

    int status = 0;
    std::function<void()> action;

    // identify / check
    std::string path;
    std::optional<std::string> declared;
    std::optional<std::string> handler;
    bool nosniff = false;

    auto* identify = app.add_subcommand("identify", "Report what every source says about a file");
    identify->add_option("path", path)->required();
    identify->add_option("--declared", declared, "Declared media type, e.g. from Content-Type");
    identify->add_flag("--nosniff", nosniff, "Ignore content signatures");
    identify->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto db = load_databases(config);
            const auto store = co::open_store(config, make_clock(o));
            const auto evidence = co::gather_evidence(path, db, store, evidence_options(declared, nosniff));
            emit(o, co::identify_report(path, evidence, make_clock(o)()));
        };
    });

    auto* check = app.add_subcommand("check", "Cross-check a file and give a verdict");
    check->add_option("path", path)->required();
    check->add_option("--declared", declared, "Declared media type, e.g. from Content-Type");
    check->add_option("--handler", handler, "Application about to open the file");
    check->add_flag("--nosniff", nosniff, "Ignore content signatures");
    check->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto db = load_databases(config);
            const auto store = co::open_store(config, make_clock(o));
            const auto a = co::check_file(path, db, store, evidence_options(declared, nosniff), handler);
            emit(o, co::check_report(path, a, make_clock(o)()));
            status = co::exit_code(a.decision.verdict);
        };
    });

    // scan
    std::string scan_dir;
    unsigned parallel = 1;
    auto* scan = app.add_subcommand("scan", "Check every file under a directory (NDJSON)");
    scan->add_option("dir", scan_dir)->required();
    scan->add_option("--parallel", parallel, "Worker threads")->check(CLI::Range(1u, 256u));
    scan->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto db = load_databases(config);
            const auto store = co::open_store(config, make_clock(o));
            const auto files = list_files(scan_dir);
            const std::int64_t now = make_clock(o)();
            std::vector<std::string> lines(files.size());
            std::vector<int> codes(files.size(), 0);
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i = next++; i < files.size(); i = next++) {
                    try {
                        const auto a = co::check_file(files[i], db, store);
                        lines[i] = co::dump(co::check_report(files[i], a, now));
                        codes[i] = co::exit_code(a.decision.verdict);
                    } catch (const co::Error& e) {
                        lines[i] = co::dump({{"v", 1}, {"path", files[i].string()}, {"error", e.what()}});
                        codes[i] = kExitIo;
                    }
                }
            };
            {
                std::vector<std::jthread> pool;
                for (unsigned t = 1; t < parallel; ++t) {
                    pool.emplace_back(worker);
                }
                worker();
            }
            for (const auto& line : lines) {
                std::cout << line << '\n';
            }
            status = codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end());
        };
    });

    // view record / list
    std::string app_id;
    std::string mime;
    bool active = false;
    std::optional<std::string> note;
    auto* view = app.add_subcommand("view", "Record or list per-application content views");
    view->require_subcommand(1);
    auto* view_record = view->add_subcommand("record", "Record one application's view");
    view_record->add_option("path", path)->required();
    view_record->add_option("--app", app_id, "Application id")->required();
    view_record->add_option("--mime", mime, "Media type the application assigns")->required();
    view_record->add_flag("--active", active, "The application treats the file as active");
    view_record->add_option("--note", note, "Free text, at most 256 bytes");
    view_record->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            auto store = co::open_store(config, make_clock(o));
            co::ContentView v;
            v.app_id = app_id;
            v.mime = parse_user_mime(mime, "--mime");
            v.active = active;
            v.content_hash = co::content_identity(path);
            v.recorded_at = make_clock(o)();
            v.note = note;
            try {
                co::record_view(store, path, v);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            emit(o, {{"v", 1}, {"path", path}, {"recorded", co::to_json(v)}});
        };
    });
    auto* view_list = view->add_subcommand("list", "List recorded views with staleness");
    view_list->add_option("path", path)->required();
    view_list->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto store = co::open_store(config, make_clock(o));
            emit(o, {{"v", 1}, {"path", path}, {"views", co::to_json(co::read_views(store, path))}});
        };
    });

    // trust set / get
    bool untrusted = false;
    auto* trust = app.add_subcommand("trust", "Bind a trust decision to the current contents");
    trust->require_subcommand(1);
    auto* trust_set = trust->add_subcommand("set", "Mark the file trusted (or --untrusted)");
    trust_set->add_option("path", path)->required();
    trust_set->add_flag("--untrusted", untrusted, "Record an explicit distrust decision");
    trust_set->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            auto store = co::open_store(config, make_clock(o));
            co::set_trust(store, path, !untrusted, make_clock(o)());
            emit(o, {{"v", 1}, {"path", path}, {"trust", co::to_string(co::get_trust(store, path))}});
        };
    });
    auto* trust_get = trust->add_subcommand("get", "Show the trust state");
    trust_get->add_option("path", path)->required();
    trust_get->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto store = co::open_store(config, make_clock(o));
            emit(o, {{"v", 1}, {"path", path}, {"trust", co::to_string(co::get_trust(store, path))}});
        };
    });

    // policy handlers set / get
    std::optional<std::string> apps;
    bool deny_all = false;
    bool clear = false;
    auto policy_json = [](const co::HandlerPolicy& p) -> co::json {
        switch (p.mode()) {
        case co::HandlerPolicy::Mode::Unrestricted: return {{"mode", "unrestricted"}};
        case co::HandlerPolicy::Mode::DenyAll: return {{"mode", "deny_all"}};
        case co::HandlerPolicy::Mode::AllowList: return {{"mode", "allow_list"}, {"allowed", p.allowed()}};
        }
        return nullptr;
    };
    auto* policy = app.add_subcommand("policy", "Per-file handler restrictions");
    policy->require_subcommand(1);
    auto* handlers = policy->add_subcommand("handlers", "Which applications may open the file");
    handlers->require_subcommand(1);
    auto* handlers_set = handlers->add_subcommand("set", "Restrict handlers");
    handlers_set->add_option("path", path)->required();
    auto* apps_opt = handlers_set->add_option("--apps", apps, "Comma-separated application ids");
    auto* deny_opt = handlers_set->add_flag("--deny-all", deny_all, "No application may open it");
    auto* clear_opt = handlers_set->add_flag("--clear", clear, "Remove the restriction");
    apps_opt->excludes(deny_opt)->excludes(clear_opt);
    deny_opt->excludes(clear_opt);
    handlers_set->callback([&] {
        action = [&] {
            co::HandlerPolicy p;
            if (deny_all) {
                p = co::HandlerPolicy::deny_all();
            } else if (apps) {
                const auto list = split_list(*apps);
                if (list.empty()) {
                    throw UsageError("--apps needs at least one id; use --deny-all or --clear");
                }
                p = co::HandlerPolicy::allow_only(list);
            } else if (!clear) {
                throw UsageError("one of --apps, --deny-all or --clear is required");
            }
            const auto config = load_config(o);
            auto store = co::open_store(config, make_clock(o));
            co::set_handler_policy(store, path, p);
            emit(o, {{"v", 1}, {"path", path}, {"policy", policy_json(co::get_allowed_handlers(store, path))}});
        };
    });
    auto* handlers_get = handlers->add_subcommand("get", "Show the restriction");
    handlers_get->add_option("path", path)->required();
    handlers_get->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto store = co::open_store(config, make_clock(o));
            emit(o, {{"v", 1}, {"path", path}, {"policy", policy_json(co::get_allowed_handlers(store, path))}});
        };
    });

    // browser run / diff
    std::string model_a;
    std::string model_b;
    std::string ctx_text;
    auto* browser = app.add_subcommand("browser", "Browser handling models");
    browser->require_subcommand(1);
    auto* browser_run = browser->add_subcommand("run", "Evaluate a model on one request");
    browser_run->add_option("model", model_a, "Bundled model name or tree file")->required();
    browser_run->add_option("--ctx", ctx_text, "Request context as JSON")->required();
    browser_run->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto tree = load_model(config, model_a);
            co::RequestContext ctx;
            try {
                ctx = co::request_context_from_json(co::json::parse(ctx_text));
            } catch (const co::json::exception& e) {
                throw UsageError(std::string("--ctx is not valid JSON: ") + e.what());
            } catch (const co::Error& e) {
                throw UsageError(std::string("--ctx: ") + e.what());
            }
            emit(o, {{"v", 1},
                     {"model", tree.name()},
                     {"context", co::to_json(ctx)},
                     {"action", co::to_string(tree.run(ctx))}});
        };
    });
    auto* browser_diff = browser->add_subcommand("diff", "Compare two models over the request grid");
    browser_diff->add_option("a", model_a)->required();
    browser_diff->add_option("b", model_b)->required();
    browser_diff->add_option("--parallel", parallel, "Worker threads")->check(CLI::Range(1u, 256u));
    browser_diff->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto a = load_model(config, model_a);
            const auto b = load_model(config, model_b);
            const auto grid = co::enumerate_grid();
            const auto divergences = co::differential(a, b, grid, parallel);
            emit(o, co::divergence_report(a, b, grid, divergences));
        };
    });

    // fetch
    std::string url;
    std::string out_dir = ".";
    std::optional<std::string> referrer;
    auto* fetch = app.add_subcommand("fetch", "Download a URL, record provenance, then check it");
    fetch->add_option("url", url)->required();
    fetch->add_option("--out", out_dir, "Destination directory");
    fetch->add_option("--referrer", referrer, "Referrer URL to send and record");
    fetch->callback([&] {
        action = [&] {
            const auto config = load_config(o);
            const auto db = load_databases(config);
            auto store = co::open_store(config, make_clock(o));
            co::FetchOptions options;
            options.referrer = referrer;
            options.clock = make_clock(o);
            const auto record = co::fetch(url, out_dir, store, options);
            const auto a = co::assess(record, db, store, make_clock(o));
            emit(o, co::fetch_report(record, a, make_clock(o)()));
            status = co::exit_code(a.decision.verdict);
        };
    });

    // db stats
    std::optional<std::string> mime_types;
    auto* db = app.add_subcommand("db", "Media type database tools");
    db->require_subcommand(1);
    auto* db_stats = db->add_subcommand("stats", "Count types per family and registration class");
    db_stats->add_option("file", mime_types, "mime.types file (default: configured)");
    db_stats->callback([&] {
        action = [&] {
            co::fs::path file;
            if (mime_types) {
                file = *mime_types;
            } else {
                file = load_config(o).mime_types;
            }
            const auto loaded = co::load_extension_map(co::read_file(file));
            co::json families = co::json::object();
            co::FamilyCounts total;
            for (const auto& [family, counts] : co::db_stats(loaded.map)) {
                families[family] = {{"official", counts.official},
                                    {"unofficial_subtype", counts.unofficial_subtype},
                                    {"unknown_family", counts.unknown_family},
                                    {"total", counts.total()}};
                total.official += counts.official;
                total.unofficial_subtype += counts.unofficial_subtype;
                total.unknown_family += counts.unknown_family;
            }
            co::json errors = co::json::array();
            for (const auto& e : loaded.errors) {
                errors.push_back({{"line", e.line()}, {"error", e.what()}});
            }
            emit(o, {{"v", 1},
                     {"file", file.string()},
                     {"families", families},
                     {"total", {{"official", total.official},
                                {"unofficial_subtype", total.unofficial_subtype},
                                {"unknown_family", total.unknown_family},
                                {"total", total.total()}}},
                     {"skipped_lines", errors}});
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        action();
        std::cout.flush();
        return status;
    } catch (const UsageError& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitUsage;
    } catch (const co::MalformedMime& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitUsage;
    } catch (const co::MalformedTree& e) {
        std::cerr << "contentoracle: model line " << e.line() << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const co::ConfigError& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitConfig;
    } catch (const co::IoError& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitIo;
    } catch (const co::HttpError& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitIo;
    } catch (const co::NetworkError& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "contentoracle: " << e.what() << '\n';
        return kExitSoftware;
    }
}
