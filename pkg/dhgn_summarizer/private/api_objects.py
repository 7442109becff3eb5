#
# MIT License
#
# (C) Copyright [2024] Hewlett Packard Enterprise Development LP
#
# Permission is hereby granted, free of charge, to any person obtaining a
# copy of this software and associated documentation files (the "Software"),
# to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense,
# and/or sell copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included
# in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR
# OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE,
# ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
"""Private implementations of API objects.

"""
from os.path import join as path_join

from nltk.stem.porter import PorterStemmer

from ..api_objects import (
    PosTagger,
    QueryNormalizer,
    CONTENT_TAGS,
    OTHER_TAG
)
from .common import FormatError
from . import FIXTURE_DIR

DEFAULT_LEXICON = path_join(FIXTURE_DIR, "lexicon.tsv")

# Lexicon tag spellings accepted in addition to the canonical ones.
_TAG_ALIASES = {
    'n': "noun",
    'v': "verb",
    'a': "adjective",
    'adj': "adjective",
    'r': "adverb",
    'adv': "adverb",
}


def read_lexicon(path):
    """Read a 'word<TAB>tag' lexicon file. Blank lines and lines
    starting with '#' are ignored.

    """
    lexicon = {}
    try:
        with open(path, 'r', encoding='UTF-8') as lexicon_file:
            for line_no, line in enumerate(lexicon_file, start=1):
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                fields = line.split('\t')
                if len(fields) != 2:
                    raise FormatError(
                        "lexicon '%s' line %d: expected 'word<TAB>tag', "
                        "got '%s'" % (path, line_no, line)
                    )
                word, tag = fields[0].lower(), fields[1].strip().lower()
                tag = _TAG_ALIASES.get(tag, tag)
                if tag not in CONTENT_TAGS and tag != OTHER_TAG:
                    raise FormatError(
                        "lexicon '%s' line %d: unknown tag '%s'" % (
                            path, line_no, tag
                        )
                    )
                lexicon[word] = tag
    except OSError as err:
        raise FormatError(
            "cannot open lexicon '%s' - %s" % (path, str(err))
        ) from err
    return lexicon


class LexiconTagger(PosTagger):
    """Lexicon lookup tagger: each known word gets its most frequent
    coarse tag, unknown alphabetic words are tagged as nouns, and
    anything that is not a word (punctuation, numbers) is 'other'.

    """
    def __init__(self, lexicon=None):
        """Constructor: 'lexicon' is a word -> tag mapping; when None
        the bundled lexicon is used.

        """
        self.lexicon = (
            lexicon if lexicon is not None else read_lexicon(DEFAULT_LEXICON)
        )

    def tag(self, tokens):
        """Tag every token.

        """
        return [self.__tag_one(token) for token in tokens]

    def __tag_one(self, token):
        """Tag a single token.

        """
        if token in self.lexicon:
            return self.lexicon[token]
        if not any(char.isalpha() for char in token):
            return OTHER_TAG
        return "noun"


class SurfaceNormalizer(QueryNormalizer):
    """Query with the surface form of the word.

    """
    def normalize(self, word):
        """Identity on the lowercased word.

        """
        return word.lower()


class StemLemmatizer(QueryNormalizer):
    """Map an inflected word to the knowledge concept sharing its
    Porter stem ("calls" -> "call"). Words whose stem matches no known
    concept are returned unchanged.

    """
    def __init__(self, known_concepts):
        """Constructor: 'known_concepts' is a container of concepts a
        lemma must belong to.

        """
        self.known = known_concepts
        self.stemmer = PorterStemmer()
        self.by_stem = {}
        # Shortest concept wins a shared stem, then alphabetical order.
        for concept in sorted(known_concepts, key=lambda c: (len(c), c)):
            self.by_stem.setdefault(self.stemmer.stem(concept), concept)

    def normalize(self, word):
        """Return the known concept sharing the stem of 'word', or the
        word itself.

        """
        word = word.lower()
        if word in self.known:
            return word
        return self.by_stem.get(self.stemmer.stem(word), word)
