#include <catch2/catch_amalgamated.hpp>
TEST_CASE("placeholder grad_test") { CHECK(true); }
