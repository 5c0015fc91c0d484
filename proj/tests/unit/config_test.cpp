#include "palpatron/config.hpp"
#include "palpatron/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace palpatron
{
namespace
{

TEST(Config, Defaults)
{
  const Config c;
  EXPECT_EQ(c.get("tissue.k0"), 600.0);
  EXPECT_EQ(c.get("tissue.damping"), 2.0);
  EXPECT_EQ(c.get("assess.threshold"), 0.3);
  EXPECT_EQ(c.get_int("assess.min_gap"), 50);
  EXPECT_EQ(c.get("servo.force_clamp"), 4.0);
  EXPECT_EQ(c.get("assess.band.hepatic.lo"), 2.6);
  EXPECT_EQ(c.get("assess.band.hepatic.hi"), 3.2);
  EXPECT_EQ(c.get_int("session.required_touches"), 5);
  EXPECT_EQ(c.get("session.time_limit"), 30.0);
  EXPECT_EQ(c.get_int("rig.count"), 1);
}

TEST(Config, UnknownKeysAndBadValues)
{
  Config c;
  EXPECT_THROW(c.set("tissue.nope", 1.0), ConfigError);
  EXPECT_THROW(c.get("tissue.nope"), ConfigError);
  EXPECT_THROW(c.set("tissue.k0", std::numeric_limits<double>::infinity()), ConfigError);
  EXPECT_THROW(c.set("rig.count", 1.5), ConfigError);
  EXPECT_THROW(c.apply_override("tissue.k0"), ConfigError);
  EXPECT_THROW(c.apply_override("tissue.k0=abc"), ConfigError);
  c.apply_override(" tissue.k0 = 700 ");
  EXPECT_EQ(c.get("tissue.k0"), 700.0);
}

TEST(Config, TextAndFileMerge)
{
  Config c;
  c.merge_text("# comment\n\ntissue.k0 = 650\nassess.min_gap=40 # trailing\n");
  EXPECT_EQ(c.get("tissue.k0"), 650.0);
  EXPECT_EQ(c.get_int("assess.min_gap"), 40);
  try
  {
    c.merge_text("tissue.k0 = 1\nbogus = 2\n", "extra.cfg");
    FAIL();
  }
  catch (const ConfigError& e)
  {
    EXPECT_NE(std::string(e.what()).find("extra.cfg:2"), std::string::npos);
  }

  testing::TempDir dir("config");
  {
    std::ofstream out(dir / "a.cfg");
    out << "tissue.damping = 0\n";
  }
  const Config f = Config::from_file(dir / "a.cfg");
  EXPECT_EQ(f.get("tissue.damping"), 0.0);
  EXPECT_THROW(Config::from_file(dir / "missing.cfg"), ConfigError);
}

TEST(Config, CanonicalFormAndHash)
{
  Config a;
  Config b;
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.hash(), b.hash());
  b.set("tissue.k0", 601.0);
  EXPECT_NE(a.hash(), b.hash());
  Config round;
  round.merge_text(b.canonical());
  EXPECT_EQ(round, b);
  EXPECT_EQ(a.hash().rfind("fnv1a64:", 0), 0U);
}

TEST(Config, NumberFormatRoundTrips)
{
  for (const double v : {0.0, 0.1, 1.0 / 3.0, 600.0, -2.5e-7, 1e300})
  {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(600.0), "600");
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Config, Fnv1aReferenceVectors)
{
  EXPECT_EQ(fnv1a64_hex(""), "fnv1a64:cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "fnv1a64:af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a64_hex("foobar"), "fnv1a64:85944171f73967e8");
}

}  // namespace
}  // namespace palpatron
