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
"""Objects presented on the summarizer API that callers may implement
themselves to plug into knowledge grounding.

"""
from abc import (
    ABCMeta,
    abstractmethod
)

# Coarse tags a tagger may emit. Only the first four mark content words.
CONTENT_TAGS = ("noun", "verb", "adjective", "adverb")
OTHER_TAG = "other"


class PosTagger(metaclass=ABCMeta):
    """A part of speech tagger producing one coarse tag per token.

    """
    @abstractmethod
    def tag(self, tokens):
        """Return a list of coarse tags, one for each token in the
        list 'tokens'. Each tag is one of CONTENT_TAGS or OTHER_TAG.

        """


class QueryNormalizer(metaclass=ABCMeta):
    """Maps a (lowercased) utterance word to the concept used as a
    knowledge retrieval query.

    """
    @abstractmethod
    def normalize(self, word):
        """Return the query concept for 'word'.

        """
