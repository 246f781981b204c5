#include <gtest/gtest.h>

#include "contentoracle/sniffer.hpp"
#include "support.hpp"

namespace co = contentoracle;
using namespace cotest;

TEST(SignatureDb, ParsesRecordsAndDefaults)
{
    const auto db = co::load_signatures(
        "# comment\n"
        "png | image/png | 0 | 89504e47 | - | - | 0\n"
        "doc | text/html | 3 | 3c68 | dfdf | 7 | 1\n");
    ASSERT_EQ(db.size(), 2u);
    const auto* png = db.find("png");
    ASSERT_NE(png, nullptr);
    EXPECT_EQ(png->weight, 4);
    EXPECT_TRUE(png->mask.empty());
    const auto* doc = db.find("doc");
    EXPECT_EQ(doc->offset, 3u);
    EXPECT_EQ(doc->weight, 7);
    EXPECT_TRUE(doc->polyglot_relevant);
}

TEST(SignatureDb, ReportsLineOfMalformedRecord)
{
    try {
        co::load_signatures("a | image/png | 0 | 89 | - | - | 0\n\nb | image/png | 0 | zz | - | - | 0\n");
        FAIL() << "expected MalformedSignature";
    } catch (const co::MalformedSignature& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(co::load_signatures("a | image/png | 0 | 8950 | ff | - | 0\n"), co::MalformedSignature);
    EXPECT_THROW(co::load_signatures("a | image/png | 0 | 8950 | - | - | 2\n"), co::MalformedSignature);
    EXPECT_THROW(co::load_signatures("a | image/png | 0 | 8950 | - | -\n"), co::MalformedSignature);
    EXPECT_THROW(co::load_signatures("a | image/png | 0 |  | - | - | 0\n"), co::MalformedSignature);
}

TEST(SignatureDb, DuplicateNameIsRejected)
{
    try {
        co::load_signatures("a | image/png | 0 | 89 | - | - | 0\na | image/gif | 0 | 47 | - | - | 0\n");
        FAIL() << "expected DuplicateName";
    } catch (const co::DuplicateName& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Sniff, BundledDatabaseIsLargeEnough)
{
    EXPECT_GE(bundled().signatures.size(), 30u);
}

TEST(Sniff, PngIsIdentified)
{
    const auto report = co::sniff(bytes({0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a, 0, 0}),
                                  bundled().signatures);
    ASSERT_NE(report.top(), nullptr);
    EXPECT_EQ(report.top()->mime.essence(), "image/png");
    EXPECT_FALSE(report.is_polyglot);
}

TEST(Sniff, EverySignatureIdentifiesItsSynthesizedFile)
{
    for (const auto& sig : bundled().signatures.signatures()) {
        SCOPED_TRACE(sig.name);
        const auto report = co::sniff(synthesize(sig), bundled().signatures);
        ASSERT_NE(report.top(), nullptr);
        EXPECT_EQ(report.top()->signature, sig.name);
    }
}

TEST(Sniff, MagicOutsideWindowIsIgnoredUnlessPolyglotRelevant)
{
    co::SignatureDb db;
    db.add({"late", co::parse_mime_type("application/x-late"), 0, {'L', 'A', 'T', 'E'}, {}, 4, false});
    const std::string data = std::string(co::kPrimaryWindow + 10, 'x') + "LATE";
    EXPECT_TRUE(co::sniff(data, db).candidates.empty());
}

TEST(Sniff, TextFallback)
{
    const auto text = co::sniff("just some words\nand a second line\n", bundled().signatures);
    EXPECT_TRUE(text.candidates.empty());
    EXPECT_EQ(text.text_fallback, co::TextFallback::LooksText);

    const auto binary = co::sniff(bytes({0x00, 0x13, 0x37, 0x00, 0xfe}), bundled().signatures);
    EXPECT_EQ(binary.text_fallback, co::TextFallback::LooksBinary);
}

TEST(Sniff, EmptyInputLooksLikeText)
{
    const auto report = co::sniff(std::string_view{}, bundled().signatures);
    EXPECT_TRUE(report.candidates.empty());
    EXPECT_EQ(report.text_fallback, co::TextFallback::LooksText);
}

TEST(IsText, Thresholds)
{
    EXPECT_TRUE(co::is_text("héllo wörld, ünïcode is fine\n"));
    EXPECT_FALSE(co::is_text(std::string("abc\0def", 7)));
    // 4 control bytes in 100 keeps 96% printable.
    std::string mostly = std::string(96, 'a') + std::string(4, '\x01');
    EXPECT_TRUE(co::is_text(mostly));
    std::string too_many = std::string(94, 'a') + std::string(6, '\x01');
    EXPECT_FALSE(co::is_text(too_many));
}

TEST(Sniff, CandidatesAreOrderedByWeightThenOffset)
{
    const auto report = co::sniff(gif_javascript(), bundled().signatures);
    ASSERT_GE(report.candidates.size(), 2u);
    for (std::size_t i = 1; i < report.candidates.size(); ++i) {
        const auto& a = report.candidates[i - 1];
        const auto& b = report.candidates[i];
        EXPECT_TRUE(a.weight > b.weight || (a.weight == b.weight && a.offset <= b.offset));
    }
    EXPECT_EQ(report.top()->mime.essence(), "text/javascript");
}

TEST(Sniff, PolyglotCorpus)
{
    for (const auto& c : polyglot_corpus()) {
        SCOPED_TRACE(c.label);
        const auto report = co::sniff(c.content, bundled().signatures);
        EXPECT_TRUE(report.is_polyglot);
    }
}

TEST(Sniff, SingleFormatFilesAreNotPolyglot)
{
    EXPECT_FALSE(co::sniff(minimal_pdf(), bundled().signatures).is_polyglot);
    EXPECT_FALSE(co::sniff(bytes({0xff, 0xd8, 0xff, 0xe0, 0, 0x10}), bundled().signatures).is_polyglot);
}

TEST(Sniff, IsDeterministic)
{
    for (const auto& c : polyglot_corpus()) {
        EXPECT_EQ(co::sniff(c.content, bundled().signatures), co::sniff(c.content, bundled().signatures));
    }
}
