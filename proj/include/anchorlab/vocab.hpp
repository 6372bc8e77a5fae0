#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace anchorlab::vocab {

struct Dish {
  std::string singular;
  std::string plural;
};

inline const std::vector<Dish>& dishes() {
  static const std::vector<Dish> kDishes = {
      {"crab cake", "crab cakes"},
      {"tuna poke bowl", "tuna poke bowls"},
      {"spaghetti carbonara", "spaghetti carbonaras"},
      {"chicken shawarma", "chicken shawarmas"},
      {"beef wellington", "beef wellingtons"},
      {"margherita pizza", "margherita pizzas"},
      {"ice cream sundae", "ice cream sundaes"},
      {"mozzarella stick", "mozzarella sticks"},
      {"bbq rib", "bbq ribs"},
      {"bowl of ramen", "bowls of ramen"},
      {"beef burrito", "beef burritos"},
      {"roast beef sandwich", "roast beef sandwiches"},
      {"pork dumpling", "pork dumplings"},
      {"eggplant parmesan", "eggplant parmesans"},
      {"fish taco", "fish tacos"},
      {"caesar salad", "caesar salads"},
      {"lobster roll", "lobster rolls"},
      {"apple pie", "apple pies"},
      {"falafel wrap", "falafel wraps"},
      {"onion ring", "onion rings"},
      {"mushroom risotto", "mushroom risottos"},
      {"veggie omelette", "veggie omelettes"},
  };
  return kDishes;
}

inline const std::vector<std::string>& restaurants() {
  static const std::vector<std::string> kRestaurants = {
      "Harvest Table", "Golden Olive", "Velvet Spoon",  "The Rustic Fork",
      "Sizzle & Serve", "Copper Kettle", "Blue Lantern", "Maple Street Diner",
  };
  return kRestaurants;
}

inline const std::vector<std::string>& people() {
  static const std::vector<std::string> kPeople = {
      "Alice", "Brian", "Clara",  "David",    "Emma",    "Felix", "Grace",  "Henry", "Iris",
      "Jack",  "Kara",  "Liam",   "Mia",      "Noah",    "Olivia", "Paul",  "Quinn", "Rachel",
      "Samuel", "Tina", "Umar",   "Victoria", "William", "Xander", "Yara",  "Zach",
  };
  return kPeople;
}

// Each activity completes "<person> ..." into an event sentence.
inline const std::vector<std::string>& activities() {
  static const std::vector<std::string> kActivities = {
      "stayed awake through the night revising",
      "volunteered at a campus event",
      "celebrated a friend's birthday in the dorm",
      "prepared slides for the class talk",
      "had lunch at the cafeteria",
      "voted in the student council elections",
      "cheered at the football match",
      "presented at the science symposium",
      "went to the professor's office hours",
      "participated in the sports tournament",
      "attended the career fair",
      "missed the bus to campus",
      "gathered with the study group in the library",
      "submitted the essay before the deadline",
      "forgot to bring the homework",
      "joined a late evening tutorial",
      "practiced for the theater play",
      "printed notes at the computer lab",
      "borrowed a book from the library",
      "went jogging around the lake",
      "cooked dinner for the roommates",
      "signed up for the chess club",
      "took photos at the art exhibition",
      "worked a shift at the campus bookstore",
  };
  return kActivities;
}

inline bool starts_with_vowel(std::string_view s) {
  return !s.empty() && std::string_view("aeiouAEIOU").find(s.front()) != std::string_view::npos;
}

}  // namespace anchorlab::vocab
