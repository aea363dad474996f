// Plain-DOM survey screens: a source product card, three option cards,
// block/progress header, and mode-specific controls.  All lookups go
// through the mounted root so the app also runs inside a jsdom window.

import { ApiClient } from './api.js'
import { SurveySession } from './session.js'
import type { Choice, ProductDto, SubmitResultDto } from './types.js'

const CHOICES: Choice[] = [1, 2, 3]

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

function formatPrice(price: number | null): string {
  return price == null ? '-' : price.toFixed(2)
}

function formatSize(product: ProductDto): string {
  if (product.size == null) return '-'
  return `${product.size} ${product.unit ?? ''}`.trim()
}

function productCard(doc: Document, product: ProductDto,
                     heading: string): HTMLElement {
  const card = el(doc, 'article', 'card')
  card.dataset['ean'] = product.ean
  card.appendChild(el(doc, 'h3', 'card-heading', heading))
  card.appendChild(el(doc, 'div', 'card-image placeholder', ''))
  card.appendChild(el(doc, 'p', 'card-name', product.name))
  card.appendChild(el(doc, 'p', 'card-brand', product.brand))
  card.appendChild(el(doc, 'p', 'card-size', formatSize(product)))
  card.appendChild(el(doc, 'p', 'card-price', formatPrice(product.price)))
  const badges = el(doc, 'ul', 'allergen-badges')
  for (const allergen of product.allergens) {
    badges.appendChild(el(doc, 'li', 'badge', allergen))
  }
  card.appendChild(badges)
  return card
}

export class SurveyApp {
  session: SurveySession | null = null
  submissionResult: SubmitResultDto | null = null
  private readonly doc: Document
  private readonly productCache = new Map<string, ProductDto>()
  private pending: Promise<void> = Promise.resolve()
  private submitting = false

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly surveyId: string,
    private readonly respondent: string,
    private readonly mode: 'user' | 'expert' = 'user',
  ) {
    this.doc = root.ownerDocument
  }

  // Resolves when the in-flight render chain settles; test hook.
  idle(): Promise<void> {
    return this.pending
  }

  private track(work: () => Promise<void>): Promise<void> {
    this.pending = this.pending.then(work).catch((error) => {
      this.renderError(String((error as Error).message ?? error))
    })
    return this.pending
  }

  start(): Promise<void> {
    this.renderLoading()
    return this.track(async () => {
      const survey = await this.client.getSurvey(this.surveyId)
      this.session = new SurveySession(survey, this.mode)
      await this.renderQuestion()
    })
  }

  private async product(ean: string): Promise<ProductDto> {
    const cached = this.productCache.get(ean)
    if (cached) return cached
    const product = await this.client.getProduct(ean)
    this.productCache.set(ean, product)
    return product
  }

  private clear(): void {
    this.root.textContent = ''
  }

  private renderLoading(): void {
    this.clear()
    this.root.appendChild(el(this.doc, 'p', 'loading', 'Loading survey...'))
  }

  renderError(message: string): void {
    this.clear()
    const box = el(this.doc, 'div', 'error')
    box.appendChild(el(this.doc, 'p', 'error-message', message))
    const retry = el(this.doc, 'button', 'retry', 'Retry')
    retry.id = 'retry'
    retry.addEventListener('click', () => {
      if (this.session) {
        void this.track(() => this.renderQuestion())
      } else {
        void this.start()
      }
    })
    box.appendChild(retry)
    this.root.appendChild(box)
  }

  private async renderQuestion(): Promise<void> {
    const session = this.session
    if (!session) return
    const view = session.current
    const index = session.currentIndex
    const [source, ...optionProducts] = await Promise.all([
      this.product(view.source),
      ...view.options.map((ean) => this.product(ean)),
    ])

    this.clear()
    const header = el(this.doc, 'header')
    header.appendChild(el(this.doc, 'p', 'block-label',
                          `Block ${view.blockIndex + 1}: ${view.blockLabel}`))
    header.appendChild(el(this.doc, 'p', 'progress',
                          `Question ${view.position} of ${view.total}`))
    this.root.appendChild(header)

    this.root.appendChild(productCard(this.doc, source, 'Unavailable product'))

    const prompt = this.mode === 'user'
      ? 'Which alternative would you pick instead?'
      : 'Expert review of the three alternatives'
    this.root.appendChild(el(this.doc, 'p', 'prompt', prompt))

    const options = el(this.doc, 'div', 'options')
    optionProducts.forEach((product, i) => {
      const choice = CHOICES[i] as Choice
      const button = el(this.doc, 'button', 'option')
      button.dataset['choice'] = String(choice)
      if (this.mode === 'user' && session.selection(index) === choice) {
        button.classList.add('selected')
      }
      button.appendChild(productCard(this.doc, product, `Option ${choice}`))
      button.addEventListener('click', () => {
        if (this.mode === 'user') {
          session.select(index, choice)
        } else if (session.expert(index).wouldSelect === true) {
          session.setSelected(index, choice)
        }
        void this.track(() => this.renderQuestion())
      })
      options.appendChild(button)
    })
    this.root.appendChild(options)

    if (this.mode === 'expert') this.renderExpertPanel(index)
    this.renderNav()
  }

  private renderExpertPanel(index: number): void {
    const session = this.session as SurveySession
    const state = session.expert(index)
    const panel = el(this.doc, 'section', 'expert-panel')
    panel.appendChild(el(this.doc, 'p', 'expert-question',
                         'Would you select any of these 3 options?'))
    for (const [label, value] of [['Yes', true], ['No', false]] as const) {
      const button = el(this.doc, 'button', 'would-select', label)
      button.dataset['value'] = String(value)
      if (state.wouldSelect === value) button.classList.add('selected')
      button.addEventListener('click', () => {
        session.setWouldSelect(index, value)
        void this.track(() => this.renderQuestion())
      })
      panel.appendChild(button)
    }
    if (state.wouldSelect === true) {
      panel.appendChild(el(this.doc, 'p', 'expert-selected',
                           state.selected == null
                             ? 'Pick the option you would select.'
                             : `Selected option ${state.selected}.`))
    }
    const rankingList = el(this.doc, 'ol', 'ranking')
    state.ranking.forEach((choice, position) => {
      const item = el(this.doc, 'li', 'rank-item', `Option ${choice}`)
      const up = el(this.doc, 'button', 'rank-up', 'up')
      up.addEventListener('click', () => {
        session.moveRank(index, position, -1)
        void this.track(() => this.renderQuestion())
      })
      const down = el(this.doc, 'button', 'rank-down', 'down')
      down.addEventListener('click', () => {
        session.moveRank(index, position, 1)
        void this.track(() => this.renderQuestion())
      })
      item.appendChild(up)
      item.appendChild(down)
      rankingList.appendChild(item)
    })
    panel.appendChild(rankingList)
    this.root.appendChild(panel)
  }

  private renderNav(): void {
    const session = this.session as SurveySession
    const nav = el(this.doc, 'nav')
    const prev = el(this.doc, 'button', 'prev', 'Back')
    prev.id = 'prev'
    prev.disabled = session.currentIndex === 0
    prev.addEventListener('click', () => {
      session.previous()
      void this.track(() => this.renderQuestion())
    })
    nav.appendChild(prev)

    if (session.isLast()) {
      const submit = el(this.doc, 'button', 'submit', 'Submit answers')
      submit.id = 'submit'
      submit.disabled = !session.isComplete() || this.submitting
      submit.addEventListener('click', () => {
        void this.track(() => this.submit())
      })
      nav.appendChild(submit)
    } else {
      const next = el(this.doc, 'button', 'next', 'Next')
      next.id = 'next'
      next.disabled = !session.canAdvance()
      next.addEventListener('click', () => {
        if (session.next()) {
          void this.track(() => this.renderQuestion())
        }
      })
      nav.appendChild(next)
    }
    nav.appendChild(el(this.doc, 'p', 'answered',
                       `${session.answeredCount}/${session.questions.length} answered`))
    this.root.appendChild(nav)
  }

  private async submit(): Promise<void> {
    const session = this.session as SurveySession
    if (this.submitting || this.submissionResult) return
    this.submitting = true
    try {
      const body = session.toSubmission(this.respondent)
      this.submissionResult = await this.client.submitResponses(this.surveyId,
                                                                body)
    } finally {
      this.submitting = false
    }
    this.renderDone()
  }

  private renderDone(): void {
    const result = this.submissionResult as SubmitResultDto
    this.clear()
    const box = el(this.doc, 'div', 'confirmation')
    box.dataset['stored'] = String(result.stored)
    box.dataset['skipped'] = String(result.skipped_duplicates)
    const total = result.stored + result.skipped_duplicates + result.expert_stored
    box.appendChild(el(this.doc, 'h2', 'thanks', 'Thank you!'))
    box.appendChild(el(this.doc, 'p', 'summary',
                       `${total} answers acknowledged by the server.`))
    this.root.appendChild(box)
  }
}
