#include <fstream>
#include <gtest/gtest.h>

#include "contentoracle/name_analyzer.hpp"
#include "json.hpp"
#include "support.hpp"

namespace co = contentoracle;
using namespace cotest;

namespace
{

const std::set<std::string, std::less<>>& known() { return bundled().known_extensions; }

std::set<std::string> anomaly_names(const co::NameReport& r)
{
    std::set<std::string> out;
    for (const auto a : r.anomalies) {
        out.emplace(co::to_string(a));
    }
    return out;
}

} // namespace

TEST(NameAnalyzer, CleanName)
{
    const auto r = co::analyze_name("report.pdf", known());
    EXPECT_TRUE(r.anomalies.empty());
    EXPECT_EQ(r.logical_extension, "pdf");
    EXPECT_EQ(r.extension_chain, std::vector<std::string>{"pdf"});
}

TEST(NameAnalyzer, DoubleExtensionNeedsBothKnown)
{
    const auto r = co::analyze_name("invoice.pdf.exe", known());
    EXPECT_TRUE(r.has(co::NameAnomaly::DoubleExtension));
    EXPECT_EQ(r.logical_extension, "exe");
    EXPECT_EQ(r.extension_chain, (std::vector<std::string>{"pdf", "exe"}));
    EXPECT_FALSE(co::analyze_name("release.v2.exe", known()).has(co::NameAnomaly::DoubleExtension));
}

TEST(NameAnalyzer, MissingExtension)
{
    const auto r = co::analyze_name("README", known());
    EXPECT_TRUE(r.has(co::NameAnomaly::MissingExtension));
    EXPECT_FALSE(r.logical_extension.has_value());
}

TEST(NameAnalyzer, BidiOverrideShowsVisualName)
{
    const auto r = co::analyze_name("invoice\xe2\x80\xae" "fdp.exe", known());
    EXPECT_TRUE(r.has(co::NameAnomaly::BidiOverride));
    EXPECT_EQ(r.logical_extension, "exe");
    // What the user sees ends in "exe.pdf" read backwards: the visual
    // rendering ends with "pdf".
    EXPECT_NE(r.display_name, r.normalized_name);
    EXPECT_EQ(r.display_name.substr(r.display_name.size() - 3), "pdf");
}

TEST(NameAnalyzer, NormalizesToNfc)
{
    // "e" + combining acute vs precomposed "é".
    const auto decomposed = co::analyze_name("re\xcc\x81sume\xcc\x81.pdf", known());
    const auto composed = co::analyze_name("r\xc3\xa9sum\xc3\xa9.pdf", known());
    EXPECT_EQ(decomposed.normalized_name, composed.normalized_name);
}

TEST(NameAnalyzer, ExtensionsAreCaseFolded)
{
    EXPECT_EQ(co::analyze_name("PHOTO.JPG", known()).logical_extension, "jpg");
}

TEST(NameAnalyzer, LabeledFixtureHasNoFalsePositivesOrNegatives)
{
    std::ifstream in(data_dir() / "fixtures" / "names.json");
    const auto cases = nlohmann::json::parse(in);
    ASSERT_EQ(cases.size(), 20u);
    for (const auto& c : cases) {
        const std::string name = c["name"].get<std::string>();
        SCOPED_TRACE(name);
        const auto expected = c["anomalies"].get<std::set<std::string>>();
        EXPECT_EQ(anomaly_names(co::analyze_name(name, known())), expected);
    }
}
