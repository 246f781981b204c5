#include <gtest/gtest.h>

#include "cli_runner.hpp"
#include "contentoracle/config.hpp"
#include "json.hpp"

namespace co = contentoracle;
using namespace cotest;
using nlohmann::json;

namespace
{

class Cli : public ::testing::Test
{
protected:
    Cli()
        : config(isolated_config(dir.path()))
    {
    }

    CliResult run(std::vector<std::string> args)
    {
        args.insert(args.begin(), {"--config", config.string(), "--now", "1700000000"});
        return run_cli(args);
    }

    TempDir dir;
    fs::path config;
};

/// Sets an environment variable for the lifetime of the guard.
class EnvGuard
{
public:
    EnvGuard(const char* name, const std::string& value)
        : name_(name)
    {
        if (const char* old = std::getenv(name)) old_ = old;
        ::setenv(name, value.c_str(), 1);
    }
    ~EnvGuard()
    {
        if (old_) ::setenv(name_, old_->c_str(), 1);
        else ::unsetenv(name_);
    }

private:
    const char* name_;
    std::optional<std::string> old_;
};

} // namespace

TEST_F(Cli, ConsistentFileIsAllowed)
{
    write_file(dir / "doc.pdf", minimal_pdf());
    const auto r = run({"check", (dir / "doc.pdf").string()});
    EXPECT_EQ(r.exit_code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["verdict"], "Allow");
    EXPECT_EQ(j["generated_at"], 1700000000);
    EXPECT_TRUE(j["consistent"].get<bool>());
}

TEST_F(Cli, DisguisedScriptIsDenied)
{
    write_file(dir / "cat.gif", gif_javascript());
    const auto r = run({"check", (dir / "cat.gif").string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_EQ(json::parse(r.out)["verdict"], "Deny");
}

TEST_F(Cli, DeclaredTypeAndHandlerPolicy)
{
    write_file(dir / "doc.pdf", minimal_pdf());
    const std::string path = (dir / "doc.pdf").string();
    EXPECT_EQ(run({"check", path, "--declared", "text/html"}).exit_code, 2);
    EXPECT_EQ(run({"policy", "handlers", "set", path, "--apps", "evince,okular"}).exit_code, 0);
    EXPECT_EQ(run({"check", path, "--handler", "okular"}).exit_code, 0);
    EXPECT_EQ(run({"check", path, "--handler", "vlc"}).exit_code, 2);
    const auto get = run({"policy", "handlers", "get", path});
    EXPECT_EQ(json::parse(get.out)["policy"]["allowed"], (json{"evince", "okular"}));
}

TEST_F(Cli, ViewsTrustAndStaleness)
{
    write_file(dir / "doc.pdf", minimal_pdf());
    const std::string path = (dir / "doc.pdf").string();
    ASSERT_EQ(run({"view", "record", path, "--app", "evince", "--mime", "application/pdf"}).exit_code, 0);
    ASSERT_EQ(run({"trust", "set", path}).exit_code, 0);
    EXPECT_EQ(json::parse(run({"trust", "get", path}).out)["trust"], "Trusted");

    append_file(dir / "doc.pdf", "<script>alert(1)</script>");
    EXPECT_EQ(json::parse(run({"trust", "get", path}).out)["trust"], "Invalidated");
    const auto views = json::parse(run({"view", "list", path}).out);
    ASSERT_EQ(views["views"].size(), 1u);
    EXPECT_TRUE(views["views"][0]["stale"].get<bool>());
}

TEST_F(Cli, ReportsAreDeterministicWithPinnedClock)
{
    for (const auto& c : polyglot_corpus()) {
        write_file(dir / c.filename, c.content);
        const auto a = run({"check", (dir / c.filename).string()});
        const auto b = run({"check", (dir / c.filename).string()});
        EXPECT_EQ(a.out, b.out) << c.label;
        EXPECT_FALSE(a.out.empty());
    }
}

TEST_F(Cli, ScanEmitsSortedNdjson)
{
    fs::create_directory(dir / "tree");
    write_file(dir / "tree" / "b.pdf", minimal_pdf());
    write_file(dir / "tree" / "a.gif", gif_javascript());
    const auto r = run({"scan", (dir / "tree").string(), "--parallel", "2"});
    EXPECT_EQ(r.exit_code, 2);
    std::istringstream lines(r.out);
    std::vector<std::string> paths;
    for (std::string line; std::getline(lines, line);) {
        paths.push_back(json::parse(line)["path"].get<std::string>());
    }
    ASSERT_EQ(paths.size(), 2u);
    EXPECT_LT(paths[0], paths[1]);
}

TEST_F(Cli, ErrorExitCodes)
{
    EXPECT_EQ(run({"check"}).exit_code, 64);
    EXPECT_EQ(run({"frobnicate"}).exit_code, 64);
    EXPECT_EQ(run({"check", (dir / "missing").string()}).exit_code, 74);
    write_file(dir / "doc.pdf", minimal_pdf());
    EXPECT_EQ(run({"check", (dir / "doc.pdf").string(), "--declared", "not a type"}).exit_code, 64);

    write_file(dir / "bad.json", R"({"colour": "blue"})");
    EXPECT_EQ(run_cli({"--config", (dir / "bad.json").string(), "check", (dir / "doc.pdf").string()}).exit_code,
              78);
    write_file(dir / "broken.tree", "? nosniff == true\n  ! Render\n");
    EXPECT_EQ(run({"browser", "diff", (dir / "broken.tree").string(), "firefox-like"}).exit_code, 78);
}

TEST_F(Cli, BrowserRunAndDiff)
{
    const auto r = run({"browser", "run", "firefox-like", "--ctx",
                        R"({"auto_download": true, "content_type": "application/pdf", "extension_mime": "application/pdf"})"});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(json::parse(r.out)["action"], "PromptDocType");

    const auto diff = json::parse(run({"browser", "diff", "firefox-like", "opera-like"}).out);
    EXPECT_EQ(diff["basis"], "model-derived");
    EXPECT_EQ(diff["grid_size"], 5184);
    EXPECT_GT(diff["divergences"].size(), 0u);
}

TEST_F(Cli, DbStats)
{
    const auto r = run({"db", "stats", (data_dir() / "fixtures" / "mime_types_200.txt").string()});
    EXPECT_EQ(r.exit_code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["families"]["chemical"]["unknown_family"], 15);
    EXPECT_EQ(j["skipped_lines"].size(), 2u);
}

TEST(Config, RelativePathsAndUnknownKeys)
{
    TempDir dir;
    write_file(dir / "c.json", R"({"sidecar": "state/s.ndjson", "backend": "sidecar"})");
    const auto c = co::load_config_file(dir / "c.json");
    EXPECT_EQ(c.sidecar, dir.path() / "state/s.ndjson");
    EXPECT_EQ(c.backend, "sidecar");
    EXPECT_EQ(c.mime_types, co::Config::defaults().mime_types);

    write_file(dir / "bad.json", R"({"backend": "tape"})");
    EXPECT_THROW(co::load_config_file(dir / "bad.json"), co::ConfigError);
    write_file(dir / "bad.json", "[1]");
    EXPECT_THROW(co::load_config_file(dir / "bad.json"), co::ConfigError);
    EXPECT_THROW(co::load_config_file(dir / "absent.json"), co::ConfigError);
}

TEST(Config, SearchOrder)
{
    TempDir dir;
    fs::create_directories(dir / "xdg" / "contentoracle");
    write_file(dir / "xdg" / "contentoracle" / "config.json", R"({"backend": "xattr"})");
    write_file(dir / "env.json", R"({"backend": "sidecar"})");
    write_file(dir / "flag.json", R"({"backend": "auto"})");

    EnvGuard xdg("XDG_CONFIG_HOME", (dir / "xdg").string());
    EnvGuard env("CONTENTORACLE_CONFIG", "");
    EXPECT_EQ(co::resolve_config(std::nullopt).backend, "xattr");
    {
        EnvGuard named("CONTENTORACLE_CONFIG", (dir / "env.json").string());
        EXPECT_EQ(co::resolve_config(std::nullopt).backend, "sidecar");
        EXPECT_EQ(co::resolve_config(dir / "flag.json").source, dir / "flag.json");
    }
    EnvGuard empty_xdg("XDG_CONFIG_HOME", (dir / "nothing").string());
    EXPECT_TRUE(co::resolve_config(std::nullopt).source.empty());
}
