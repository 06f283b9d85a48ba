#include <catch2/catch_amalgamated.hpp>
TEST_CASE("placeholder model_test") { CHECK(true); }
