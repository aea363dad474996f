// Browser entry point: ?survey=<id>&mode=user|expert, API on same origin.

import { ApiClient, getOrCreateRespondent } from './api.js'
import { SurveyApp } from './render.js'

function bootstrap(): void {
  const root = document.getElementById('app')
  if (!root) throw new Error('missing #app mount point')
  const params = new URLSearchParams(window.location.search)
  const surveyId = params.get('survey')
  if (!surveyId) {
    root.textContent = 'Add ?survey=<id> to the URL to open a questionnaire.'
    return
  }
  const mode = params.get('mode') === 'expert' ? 'expert' : 'user'
  const client = new ApiClient(window.location.origin)
  const respondent = getOrCreateRespondent(window.sessionStorage)
  const app = new SurveyApp(root, client, surveyId, respondent, mode)
  void app.start()
}

bootstrap()
