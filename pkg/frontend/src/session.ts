// Survey answering state machine.  A respondent moves through the
// server-given question order, one selection per question, and can only
// advance once the current question is answered.  Expert mode replaces
// the single choice with a would-select toggle, an optional pick and a
// full ranking of the three options.

import type {
  Choice,
  ExpertAnswerDto,
  SubmitBodyDto,
  SurveyDto,
  SurveyQuestionDto,
} from './types.js'

export type Mode = 'user' | 'expert'

export interface QuestionView extends SurveyQuestionDto {
  blockLabel: string
  blockIndex: number
  position: number
  total: number
}

export interface ExpertState {
  wouldSelect: boolean | null
  selected: Choice | null
  ranking: [Choice, Choice, Choice]
}

export class SurveySession {
  readonly questions: QuestionView[]
  private readonly selections: (Choice | null)[]
  private readonly expertStates: ExpertState[]
  private index = 0

  constructor(readonly survey: SurveyDto, readonly mode: Mode = 'user') {
    this.questions = []
    survey.blocks.forEach((block, blockIndex) => {
      for (const question of block.questions) {
        this.questions.push({
          ...question,
          blockLabel: block.approach,
          blockIndex,
          position: this.questions.length + 1,
          total: 0,
        })
      }
    })
    for (const view of this.questions) view.total = this.questions.length
    this.selections = this.questions.map(() => null)
    this.expertStates = this.questions.map(() => ({
      wouldSelect: null,
      selected: null,
      ranking: [1, 2, 3],
    }))
  }

  get current(): QuestionView {
    const view = this.questions[this.index]
    if (!view) throw new Error('empty survey')
    return view
  }

  get currentIndex(): number {
    return this.index
  }

  selection(index: number): Choice | null {
    return this.selections[index] ?? null
  }

  select(index: number, choice: Choice): void {
    this.selections[index] = choice
  }

  expert(index: number): ExpertState {
    const state = this.expertStates[index]
    if (!state) throw new Error(`no question at index ${index}`)
    return state
  }

  setWouldSelect(index: number, value: boolean): void {
    const state = this.expert(index)
    state.wouldSelect = value
    if (!value) state.selected = null
  }

  setSelected(index: number, choice: Choice): void {
    const state = this.expert(index)
    if (state.wouldSelect !== true) {
      throw new Error('selected is only available after answering yes')
    }
    state.selected = choice
  }

  // Move the option at a ranking position up or down one slot; the
  // ranking stays a permutation of (1, 2, 3) by construction.
  moveRank(index: number, position: number, direction: -1 | 1): void {
    const state = this.expert(index)
    const target = position + direction
    if (position < 0 || position > 2 || target < 0 || target > 2) return
    const ranking = [...state.ranking] as [Choice, Choice, Choice]
    const a = ranking[position] as Choice
    const b = ranking[target] as Choice
    ranking[position] = b
    ranking[target] = a
    state.ranking = ranking
  }

  answered(index: number): boolean {
    if (this.mode === 'user') return this.selections[index] != null
    const state = this.expert(index)
    if (state.wouldSelect === null) return false
    return state.wouldSelect === false || state.selected != null
  }

  canAdvance(): boolean {
    return this.answered(this.index)
  }

  next(): boolean {
    if (!this.canAdvance() || this.index >= this.questions.length - 1) {
      return false
    }
    this.index += 1
    return true
  }

  previous(): boolean {
    if (this.index === 0) return false
    this.index -= 1
    return true
  }

  get answeredCount(): number {
    return this.questions.filter((_, i) => this.answered(i)).length
  }

  isComplete(): boolean {
    return this.questions.every((_, i) => this.answered(i))
  }

  isLast(): boolean {
    return this.index === this.questions.length - 1
  }

  toSubmission(respondent: string): SubmitBodyDto {
    if (!this.isComplete()) {
      throw new Error('survey is not fully answered')
    }
    if (this.mode === 'user') {
      return {
        respondent,
        responses: this.questions.map((question, i) => ({
          question: question.id,
          choice: this.selections[i] as Choice,
        })),
      }
    }
    const expert: ExpertAnswerDto[] = this.questions.map((question, i) => {
      const state = this.expert(i)
      return {
        question: question.id,
        would_select: state.wouldSelect === true,
        selected: state.selected,
        ranking: state.ranking,
      }
    })
    return { respondent, expert }
  }
}
