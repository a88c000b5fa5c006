#!/usr/bin/env python3
"""Regenerate crates/core/tests/data/sentiment_golden.tsv.

Scores 200 social-media style captions with the reference VADER
implementation (pip install vaderSentiment==3.3.2) and writes
`caption<TAB>compound` rows. The caption set is fixed by the seed below.
"""
import random
import sys
from pathlib import Path

from vaderSentiment.vaderSentiment import SentimentIntensityAnalyzer

OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/data/sentiment_golden.tsv"

HAND = [
    "I love my dog :)",
    "I love my dog!!",
    "sux lol",
    "Today SUX!",
    "Today only kinda sux! But I'll get by, lol",
    "Make sure you :) or :D today!",
    "Not bad at all",
    "best day ever with this little guy 🐶❤️",
    "monday blues :( #mood",
    "ugh my cat knocked my coffee over AGAIN 😡",
    "friggin adorable pupper",
    "not happy with this weather at all",
    "lmao he fell asleep on my laptop",
    "so so SO happy rn!!!",
    "he's not the worst roommate tbh",
    "this is the shit",
    "worst. haircut. ever.",
    "no regrets",
    "kinda tired but totally worth it :D",
    "can't believe how cute she is",
    "#blessed #happy #weekend",
    "meh",
    "ok",
    "walk time with my best buddy",
    "she never fails to make me smile",
    "rip my favorite sneakers :'(",
    "LOL this face tho",
    "feeling sick today, stay home and cuddle",
    "I hate mondays but I love coffee",
    "wow wow wow!!!",
    "Happy birthday to the goodest boy 🎂🎉",
    "not even mad, just disappointed",
    "absolutely gorgeous sunset tonight",
    "barely slept :/",
    "the view is to die for",
    "yeah right, like that's gonna happen",
    "xoxo",
    "heartbroken. miss you buddy 💔",
    "nothing beats a lazy sunday",
    "sooo excited for the trip!!",
]

SUBJECTS = [
    "my dog", "my cat", "this pup", "the kitty", "my boyfriend", "my girl",
    "the squad", "my little one", "brunch", "the beach", "this weather",
    "work", "the gym", "my hair", "the new place", "road trip", "mom",
    "coffee", "date night", "game day",
]
POS = [
    "love", "amazing", "awesome", "great", "happy", "cute", "adorable",
    "perfect", "fun", "beautiful", "lol", "best", "good", "lovely", "yay",
    "fantastic", "excited", "sweet", "glad", "haha",
]
NEG = [
    "hate", "awful", "terrible", "sad", "sux", "bad", "tired", "sick",
    "angry", "annoying", "ugly", "miss", "lonely", "boring", "ugh", "fail",
    "worst", "stressed", "broken", "cry",
]
BOOST = ["so", "very", "really", "totally", "friggin", "hella", "kinda",
         "sorta", "slightly", "extremely", "barely"]
NEGATE = ["not", "never", "don't", "isn't", "can't", "ain't"]
EMOTICONS = [":)", ":(", ":D", ";)", ":P", "<3", ":/", "xD", ":-)", ":'("]
EMOJI = ["😍", "😂", "😭", "❤️", "🐶", "🐱", "😡", "😊", "🙄", "🎉"]
FILLER = ["with", "and", "at", "today", "tonight", "rn", "tbh", "omg",
          "just", "again", "this", "weekend", "finally", "lately", "#tbt",
          "#nofilter", "#mydog", "#mycat", "#selfie", "#life"]


def random_caption(rng):
    parts = []
    parts.append(rng.choice(SUBJECTS))
    n_clauses = rng.choice([1, 1, 2])
    for c in range(n_clauses):
        if c == 1:
            parts.append(rng.choice(["but", "and", "but", "tho"]))
        if rng.random() < 0.25:
            parts.append(rng.choice(NEGATE))
        if rng.random() < 0.35:
            parts.append(rng.choice(BOOST))
        word = rng.choice(POS if rng.random() < 0.55 else NEG)
        if rng.random() < 0.15:
            word = word.upper()
        parts.append(word)
        for _ in range(rng.randint(0, 2)):
            parts.append(rng.choice(FILLER))
    if rng.random() < 0.4:
        parts.append(rng.choice(EMOTICONS))
    if rng.random() < 0.3:
        parts.append(rng.choice(EMOJI))
    text = " ".join(parts)
    bangs = rng.choice([0, 0, 0, 1, 2, 3, 5])
    text += "!" * bangs
    if rng.random() < 0.1:
        text += "??"
    return text


def main():
    rng = random.Random(20171)
    captions = list(HAND)
    seen = set(captions)
    while len(captions) < 200:
        c = random_caption(rng)
        if c not in seen:
            seen.add(c)
            captions.append(c)
    analyzer = SentimentIntensityAnalyzer()
    with open(OUT, "w", encoding="utf-8") as f:
        f.write("# caption\tcompound (vaderSentiment 3.3.2)\n")
        for c in captions:
            assert "\t" not in c and "\n" not in c
            f.write(f"{c}\t{analyzer.polarity_scores(c)['compound']}\n")
    print(f"wrote {len(captions)} captions to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
