# SPDX-License-Identifier: Apache-2.0
"""Generates the built-in pinyin table and the 200-sentence toy corpus.

The corpus is written pre-segmented (single spaces between words). Every
character appearing in the corpus is guaranteed to have an entry in the
pinyin table; the table additionally carries a set of common characters so
interactive conversion inputs stay covered.
"""

import random
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

# char -> comma-separated toneless readings, default first.
READINGS = {
    # pronouns, people
    "我": "wo", "你": "ni", "他": "ta", "她": "ta", "们": "men",
    "老": "lao", "师": "shi", "学": "xue", "生": "sheng", "医": "yi",
    "妈": "ma", "爸": "ba", "哥": "ge", "姐": "jie", "妹": "mei",
    "朋": "peng", "友": "you", "同": "tong", "孩": "hai", "子": "zi",
    "作": "zuo", "家": "jia", "歌": "ge", "手": "shou", "画": "hua",
    "农": "nong", "民": "min", "工": "gong", "人": "ren", "司": "si",
    "机": "ji",
    # time and adverbs
    "今": "jin", "天": "tian", "明": "ming", "昨": "zuo", "早": "zao",
    "上": "shang", "晚": "wan", "周": "zhou", "末": "mo", "经": "jing",
    "常": "chang", "每": "mei", "非": "fei", "已": "yi", "很": "hen",
    "正": "zheng", "在": "zai", "一": "yi", "起": "qi", "慢": "man",
    "认": "ren", "真": "zhen", "先": "xian", "再": "zai", "又": "you",
    # verbs
    "喜": "xi", "欢": "huan", "习": "xi", "讨": "tao", "论": "lun",
    "练": "lian", "研": "yan", "究": "jiu", "阅": "yue", "读": "du",
    "准": "zhun", "备": "bei", "加": "jia", "观": "guan", "看": "kan",
    "收": "shou", "拾": "shi", "打": "da", "扫": "sao", "购": "gou",
    "买": "mai", "品": "pin", "尝": "chang", "制": "zhi", "演": "yan",
    "奏": "zou", "欣": "xin", "赏": "shang", "记": "ji", "录": "lu",
    "分": "fen", "享": "xiang", "介": "jie", "绍": "shao", "完": "wan",
    "成": "cheng", "开": "kai", "始": "shi", "结": "jie", "束": "shu",
    "忘": "wang", "带": "dai", "来": "lai", "展": "zhan", "示": "shi",
    "描": "miao", "述": "shu", "翻": "fan", "译": "yi", "整": "zheng",
    "理": "li", "设": "she", "计": "ji", "修": "xiu", "植": "zhi",
    "烹": "peng", "饪": "ren", "拍": "pai", "摄": "she", "旅": "lv",
    "行": "xing,hang", "散": "san", "步": "bu", "游": "you", "泳": "yong",
    "唱": "chang", "跳": "tiao", "舞": "wu", "写": "xie", "思": "si",
    "考": "kao", "回": "hui", "答": "da", "提": "ti", "问": "wen",
    "帮": "bang", "助": "zhu", "照": "zhao", "顾": "gu", "保": "bao",
    "护": "hu", "爱": "ai", "听": "ting", "吃": "chi", "喝": "he",
    "去": "qu", "玩": "wan", "用": "yong", "给": "gei", "让": "rang",
    "说": "shuo", "要": "yao", "想": "xiang", "会": "hui,kuai",
    # study topics and objects
    "数": "shu", "音": "yin", "乐": "le,yue", "历": "li", "史": "shi",
    "物": "wu", "化": "hua", "语": "yu", "文": "wen", "英": "ying",
    "电": "dian", "脑": "nao", "影": "ying", "视": "shi", "小": "xiao",
    "故": "gu", "事": "shi", "新": "xin", "闻": "wen", "报": "bao",
    "纸": "zhi", "杂": "za", "志": "zhi", "诗": "shi", "绘": "hui",
    "书": "shu", "法": "fa", "象": "xiang", "棋": "qi", "篮": "lan",
    "球": "qiu", "足": "zu", "网": "wang", "乒": "ping", "乓": "pang",
    "羽": "yu", "毛": "mao", "饭": "fan", "午": "wu", "蛋": "dan",
    "糕": "gao", "饺": "jiao", "面": "mian", "条": "tiao", "米": "mi",
    "水": "shui", "果": "guo", "蔬": "shu", "菜": "cai", "苹": "ping",
    "香": "xiang", "蕉": "jiao", "葡": "pu", "萄": "tao", "西": "xi",
    "瓜": "gua", "茶": "cha", "咖": "ka", "啡": "fei", "花": "hua",
    "园": "yuan", "公": "gong", "图": "tu", "馆": "guan", "博": "bo",
    "校": "xiao", "室": "shi", "操": "cao", "场": "chang", "城": "cheng",
    "市": "shi", "乡": "xiang", "村": "cun", "风": "feng", "景": "jing",
    "片": "pian", "房": "fang", "间": "jian", "厨": "chu", "桌": "zhuo",
    "椅": "yi", "衣": "yi", "服": "fu", "鞋": "xie", "帽": "mao",
    "钢": "gang", "琴": "qin", "吉": "ji", "动": "dong", "熊": "xiong",
    "猫": "mao", "兔": "tu", "鸽": "ge", "狗": "gou", "鱼": "yu",
    "鸟": "niao", "马": "ma", "牛": "niu", "羊": "yang",
    # particles, counters, function words
    "的": "de,di", "了": "le,liao", "和": "he", "也": "ye", "吗": "ma",
    "个": "ge", "本": "ben", "些": "xie", "好": "hao", "大": "da",
    "多": "duo", "几": "ji", "张": "zhang", "位": "wei", "只": "zhi",
    "首": "shou", "部": "bu", "篇": "pian", "幅": "fu", "座": "zuo",
    "节": "jie", "门": "men", "堂": "tang", "对": "dui", "错": "cuo",
    "快": "kuai", "美": "mei", "丽": "li", "温": "wen", "暖": "nuan",
    "干": "gan", "净": "jing", "安": "an", "静": "jing", "热": "re",
    "闹": "nao", "有": "you", "趣": "qu", "精": "jing", "彩": "cai",
    "可": "ke", "最": "zui", "太": "tai", "还": "hai,huan",
    "与": "yu", "或": "huo", "但": "dan", "因": "yin", "为": "wei",
    "所": "suo", "以": "yi", "然": "ran", "后": "hou", "次": "ci",
    "第": "di", "二": "er", "三": "san", "四": "si", "五": "wu",
    "六": "liu", "七": "qi", "八": "ba", "九": "jiu", "十": "shi",
    "这": "zhe", "那": "na", "中": "zhong", "国": "guo",
    # additional coverage for interactive conversion examples
    "暴": "bao", "力": "li", "病": "bing", "媒": "mei", "体": "ti",
    "幻": "huan", "梦": "meng", "模": "mo,mu", "特": "te", "木": "mu",
    "头": "tou", "煤": "mei", "炭": "tan", "放": "fang", "弃": "qi",
    "即": "ji", "使": "shi", "是": "shi", "无": "wu", "处": "chu",
    "谈": "tan", "现": "xian", "堆": "dui", "良": "liang", "歪": "wai",
    "曲": "qu", "实": "shi", "血": "xue", "馒": "man", "繁": "fan",
    "重": "zhong,chong", "业": "ye", "评": "ping", "区": "qu",
    "挨": "ai", "不": "bu", "意": "yi", "幸": "xing", "福": "fu",
    "魔": "mo", "沙": "sha", "迟": "chi", "到": "dao", "落": "luo",
    "布": "bu", "表": "biao", "包": "bao", "于": "yu", "得": "de,dei",
    "着": "zhe,zhao,zhuo", "长": "chang,zhang", "没": "mei,mo",
    "地": "di,de", "都": "dou,du", "发": "fa", "种": "zhong,chong",
    "能": "neng", "见": "jian", "感": "gan", "情": "qing",
    "参": "can,shen", "教": "jiao",
}

SUBJECTS = [
    "我", "你", "他", "她", "我们", "老师", "学生", "医生", "妈妈", "爸爸",
    "哥哥", "姐姐", "妹妹", "朋友", "同学", "孩子", "作家", "歌手", "画家",
    "农民", "工人", "司机",
]
ADVERBS = [
    "今天", "明天", "昨天", "早上", "晚上", "周末", "经常", "每天", "非常",
    "已经", "正在", "一起", "认真", "慢慢",
]
# verb -> the objects it plausibly takes
VERB_OBJECTS = {
    "学习": ["数学", "历史", "物理", "化学", "语文", "英语", "书法", "绘画"],
    "练习": ["书法", "钢琴", "小提琴", "游泳", "篮球", "足球", "网球", "羽毛球"],
    "研究": ["数学", "历史", "物理", "化学", "动物", "植物"],
    "讨论": ["数学", "历史", "新闻", "小说", "电影", "故事"],
    "阅读": ["小说", "故事", "新闻", "报纸", "杂志", "诗歌"],
    "翻译": ["小说", "故事", "诗歌", "新闻"],
    "观看": ["电影", "电视", "新闻", "风景"],
    "欣赏": ["音乐", "绘画", "风景", "诗歌", "照片"],
    "演奏": ["钢琴", "小提琴", "音乐"],
    "制作": ["蛋糕", "饺子", "面条", "米饭", "照片"],
    "品尝": ["蛋糕", "饺子", "面条", "米饭", "水果", "咖啡"],
    "购买": ["水果", "蔬菜", "苹果", "香蕉", "葡萄", "西瓜", "衣服", "鞋子", "帽子", "报纸"],
    "准备": ["晚饭", "早饭", "米饭", "面条", "蛋糕"],
    "收拾": ["房间", "桌子", "衣服", "鞋子"],
    "打扫": ["房间", "教室", "厨房"],
    "修理": ["电脑", "手机", "桌子", "椅子"],
    "拍摄": ["照片", "风景", "电影", "动物"],
    "记录": ["故事", "新闻", "风景"],
    "分享": ["故事", "照片", "音乐", "水果", "蛋糕"],
    "介绍": ["朋友", "故事", "新闻", "风景"],
    "描述": ["风景", "故事", "照片"],
    "照顾": ["孩子", "熊猫", "兔子", "鸽子"],
    "保护": ["动物", "植物", "熊猫"],
    "喜欢": ["音乐", "电影", "篮球", "足球", "网球", "羽毛球", "象棋", "熊猫",
             "咖啡", "诗歌", "香蕉", "苹果"],
}
SHORT_VERB_OBJECTS = {
    "看": ["书", "报纸", "电影", "电视", "熊猫", "风景"],
    "听": ["音乐", "故事", "新闻"],
    "买": ["书", "茶", "花", "水果", "苹果", "报纸"],
    "喝": ["茶", "咖啡"],
    "吃": ["蛋糕", "饺子", "面条", "米饭", "苹果", "香蕉", "西瓜", "鱼"],
    "学": ["数学", "历史", "物理", "化学", "英语", "书法"],
    "写": ["小说", "故事", "诗歌"],
    "画": ["花", "鸟", "马", "牛", "熊猫", "风景"],
    "读": ["书", "小说", "诗歌", "报纸", "杂志"],
}
PLACES = ["学校", "公园", "花园", "城市", "乡村", "教室", "操场", "图书馆", "博物馆", "厨房"]


def pick_vo(r, table):
    verb = r.choice(sorted(table))
    return verb, r.choice(table[verb])


def t_adv_vo(r):
    v, o = pick_vo(r, VERB_OBJECTS)
    return [r.choice(SUBJECTS), r.choice(ADVERBS), v, o]


def t_vo(r):
    v, o = pick_vo(r, VERB_OBJECTS)
    return [r.choice(SUBJECTS), v, o]


def t_place_vo(r):
    v, o = pick_vo(r, VERB_OBJECTS)
    return [r.choice(SUBJECTS), "在", r.choice(PLACES), v, o]


def t_together(r):
    v, o = pick_vo(r, VERB_OBJECTS)
    return [r.choice(SUBJECTS), "和", r.choice(SUBJECTS), "一起", v, o]


def t_go_short(r):
    v, o = pick_vo(r, SHORT_VERB_OBJECTS)
    return [r.choice(SUBJECTS), r.choice(ADVERBS), "去", r.choice(PLACES), v, o]


def t_adv_short(r):
    v, o = pick_vo(r, SHORT_VERB_OBJECTS)
    return [r.choice(SUBJECTS), r.choice(ADVERBS), v, o]


def t_like_two(r):
    objs = VERB_OBJECTS["喜欢"]
    a, b = r.sample(objs, 2)
    return [r.choice(SUBJECTS), "喜欢", a, "和", b]


def t_place_short(r):
    v, o = pick_vo(r, SHORT_VERB_OBJECTS)
    return [r.choice(SUBJECTS), "在", r.choice(PLACES), v, o]


TEMPLATES = [t_adv_vo, t_vo, t_place_vo, t_together, t_go_short, t_adv_short,
             t_like_two, t_place_short]


def check_words(words):
    for word in words:
        for ch in word:
            if ch not in READINGS:
                raise SystemExit(f"character {ch!r} lacks a pinyin entry")


def main():
    rng = random.Random(20240229)
    check_words(SUBJECTS)
    check_words(ADVERBS)
    check_words(PLACES)
    check_words(["在", "和", "一起", "去"])
    for table in (VERB_OBJECTS, SHORT_VERB_OBJECTS):
        for verb, objects in table.items():
            check_words([verb])
            check_words(objects)

    sentences = []
    seen = set()
    while len(sentences) < 200:
        words = rng.choice(TEMPLATES)(rng)
        line = " ".join(words)
        if line in seen:
            continue
        seen.add(line)
        sentences.append(line)

    DATA_DIR.mkdir(parents=True, exist_ok=True)
    corpus_path = DATA_DIR / "toy_corpus_200.txt"
    corpus_path.write_text("\n".join(sentences) + "\n", encoding="utf-8")

    table_path = DATA_DIR / "pinyin_base.tsv"
    lines = ["# Built-in pinyin table: <char>\\t<syllable>[,<syllable>...]",
             "# First syllable is the default reading. Toneless, lowercase."]
    for ch in sorted(READINGS):
        lines.append(f"{ch}\t{READINGS[ch]}")
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {corpus_path} ({len(sentences)} sentences)")
    print(f"wrote {table_path} ({len(READINGS)} characters)")


if __name__ == "__main__":
    main()
