/// Object class vocabulary. Semantic id of a class is its index + 1; id 0 is background.
pub const CLASS_VOCABULARY: [&str; 57] = [
    "wall", "floor", "ceiling", "door", "window", "bed", "chair", "table", "sofa", "cabinet",
    "shelf", "desk", "counter", "sink", "toilet", "bathtub", "shower", "stove", "oven",
    "refrigerator", "microwave", "dishwasher", "washer", "dryer", "fireplace", "television",
    "monitor", "lamp", "picture", "mirror", "curtain", "rug", "plant", "vase", "bowl", "mug",
    "bottle", "book", "laptop", "keyboard", "pillow", "towel", "basket", "box", "bin", "stool",
    "bench", "bookshelf", "dresser", "nightstand", "wardrobe", "ottoman", "piano", "speaker",
    "fan", "clock", "drawer",
];

pub fn class_id(label: &str) -> Option<u16> {
    CLASS_VOCABULARY.iter().position(|c| *c == label).map(|i| i as u16 + 1)
}

pub fn class_label(id: u16) -> Option<&'static str> {
    if id == 0 {
        return None;
    }
    CLASS_VOCABULARY.get(id as usize - 1).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_roundtrip_and_are_unique() {
        for (i, c) in CLASS_VOCABULARY.iter().enumerate() {
            assert_eq!(class_id(c), Some(i as u16 + 1));
            assert_eq!(class_label(i as u16 + 1), Some(*c));
        }
        assert_eq!(class_id("unknown_custom"), None);
        assert_eq!(class_label(0), None);
    }
}
