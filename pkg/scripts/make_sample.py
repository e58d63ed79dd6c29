"""Regenerate src/bimem/data/sample_conversation.json."""

import json
from datetime import datetime, timedelta
from pathlib import Path

TURNS = [
    ("Maria", "I just finished a long night shift at the hospital, nursing is exhausting some weeks", "That sounds tiring, make sure you rest."),
    ("Maria", "My favourite way to recover is hiking in the mountains on the weekend", "Mountain air is great for recovery."),
    ("Maria", "I bought a new camera lens for my landscape photography", "Nice, which lens did you pick?"),
    ("Maria", "It is a wide angle lens, perfect for mountain sunrise photography", "Wide angle suits landscapes well."),
    ("Maria", "Can you suggest a mild soup recipe, I really cannot handle spicy food", "A carrot and ginger soup is gentle and warming."),
    ("Maria", "My friend Jess wants to go to a spicy Sichuan restaurant for her birthday dinner", "You could order milder dishes there."),
    ("Maria", "At the Sichuan birthday dinner everyone ordered extra spicy dishes so I joined in", "Sounds like a fun night with friends."),
    ("Maria", "I volunteer at the animal shelter every Sunday morning walking the dogs", "Volunteering with dogs is rewarding."),
    ("Maria", "One shelter dog named Biscuit is very shy and hides from visitors", "Shy dogs often need patience."),
    ("Maria", "I think I want to adopt Biscuit from the shelter", "Adopting a shy dog can be very rewarding."),
    ("Maria", "My mother thinks adopting a dog with my night shifts is a bad idea", "Maybe a dog walker could help."),
    ("Maria", "I planned a hiking trip to the Dolomites with Jess next summer", "The Dolomites are stunning for hiking."),
    ("Maria", "We booked mountain huts along the Dolomites hiking route", "Hut to hut hiking is a great experience."),
    ("Maria", "I want to photograph the Dolomites at sunrise from the hut terrace", "Sunrise there should be spectacular."),
    ("Maria", "Honesty matters most to me, I always tell patients the truth gently", "That builds a lot of trust."),
    ("Maria", "I started reading a book about compassion in healthcare", "That fits your work well."),
    ("Maria", "My brother Luis is moving to Lisbon for a new job", "Lisbon is a lovely city."),
    ("Maria", "I will visit Luis in Lisbon in October and bring my camera", "Lisbon has great light for photography."),
    ("Maria", "Can you suggest mild Portuguese dishes I can try in Lisbon", "Bacalhau and caldo verde are both mild."),
    ("Maria", "Family dinners with my mother are always home cooked and mild", "Home cooking can be very comforting."),
    ("Maria", "I signed up for a photography course on night sky photography", "Astrophotography is a fun challenge."),
    ("Maria", "The photography course meets on Thursday evenings at the community college", "Thursday evenings fit around weekends nicely."),
    ("Maria", "I feel anxious before job interviews even though I am experienced", "Preparation can help ease that anxiety."),
    ("Maria", "I have an interview for a senior nurse position at the hospital", "Good luck with the senior nurse interview."),
    ("Maria", "The senior nurse interview went well and they offered me the job", "Congratulations on the new position!"),
    ("Maria", "With the senior nurse job I will have day shifts instead of nights", "Day shifts will make life easier."),
    ("Maria", "Day shifts mean adopting Biscuit from the shelter is finally possible", "That is wonderful news for Biscuit."),
    ("Maria", "I adopted Biscuit and he already sleeps at the foot of my bed", "Biscuit sounds happy in his new home."),
    ("Maria", "Biscuit still hides when my neighbor visits but he is getting braver", "Give him time to adjust."),
    ("Maria", "Jess and I went hiking with Biscuit on a forest trail", "Dogs love forest trails."),
    ("Maria", "I took photographs of Biscuit on the forest trail with my new lens", "Those photos must be lovely."),
    ("Maria", "Community matters to me, I organise a monthly charity bake sale for the shelter", "A bake sale is a great fundraiser."),
    ("Maria", "The charity bake sale raised enough money for new shelter kennels", "That is a great result."),
    ("Maria", "My mother finally met Biscuit and she loves him now", "It is nice that she came around."),
    ("Maria", "I am learning Portuguese before visiting Luis in Lisbon", "Learning the language will help a lot."),
    ("Maria", "In Lisbon Luis took me to a quiet fado bar", "Fado music is very moving."),
    ("Maria", "I photographed the Lisbon trams at golden hour", "Lisbon trams are very photogenic."),
    ("Maria", "Back home I printed my Lisbon photographs for an exhibition at the community college", "An exhibition is a big step."),
    ("Maria", "I am nervous about the photography exhibition opening night", "Nervousness shows you care about it."),
    ("Maria", "The photography exhibition opened and my mother and Jess both came", "What a supportive evening."),
]

QA = [
    ("What job offer did Maria get after her interview?", "senior nurse position at the hospital", "single_hop", [24, 25]),
    ("What is the name of the shelter dog Maria adopted?", "Biscuit", "single_hop", [9, 28]),
    ("Where did Maria visit her brother?", "Lisbon", "multi_hop", [17, 18]),
    ("Why could Maria finally adopt the dog?", "day shifts", "multi_hop", [26, 27]),
    ("What kind of food does Maria prefer?", "mild food", "open_domain", [5, 20]),
    ("When does the photography course meet?", "Thursday evenings", "temporal", [22]),
    ("Does Maria like rollercoasters?", "not mentioned", "adversarial", []),
]


def main() -> None:
    start = datetime(2023, 3, 1, 8, 30)
    turns = [
        {"turn": i + 1, "speaker": s, "query": q, "response": r, "timestamp": (start + timedelta(days=3 * i)).isoformat()}
        for i, (s, q, r) in enumerate(TURNS)
    ]
    qa = [
        {"conversation_id": "maria", "question": q, "answer": a, "category": c, "evidence": ev}
        for q, a, c, ev in QA
    ]
    out = Path(__file__).resolve().parents[1] / "src" / "bimem" / "data" / "sample_conversation.json"
    out.write_text(json.dumps({"conversations": [{"id": "maria", "turns": turns}], "qa": qa}, indent=2) + "\n")
    print(f"wrote {len(turns)} turns, {len(qa)} QA items to {out}")


if __name__ == "__main__":
    main()
